#!/usr/bin/env node
/**
 * figures <recipe.json> [...more recipes]
 *
 * Renders each recipe to its SVG output path. Exit codes: 0 on success,
 * 2 on a recipe problem, 1 on a data/schema problem.
 */

import { CsvSchemaError } from "./csv";
import { RecipeError, runRecipeFile } from "./recipes";

function main(argv: string[]): number {
  if (argv.length === 0) {
    process.stderr.write("usage: figures <recipe.json> [...]\n");
    return 2;
  }
  for (const recipePath of argv) {
    try {
      const out = runRecipeFile(recipePath);
      process.stdout.write(`wrote ${out}\n`);
    } catch (err) {
      if (err instanceof RecipeError) {
        process.stderr.write(`recipe error: ${err.message}\n`);
        return 2;
      }
      if (err instanceof CsvSchemaError) {
        process.stderr.write(`schema error: ${err.message}\n`);
        return 1;
      }
      process.stderr.write(`error: ${(err as Error).message}\n`);
      return 1;
    }
  }
  return 0;
}

process.exit(main(process.argv.slice(2)));
