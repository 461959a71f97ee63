/**
 * Figure recipes: a JSON file names the kind, the input CSVs, optional
 * series selectors, and the output image path. Four kinds cover the
 * shipped figure analogs:
 *
 *  - convergence:          gap-vs-iteration on a log-y axis (needs an
 *                          oracle value), or raw value series when
 *                          `series` selectors are given
 *  - relaxation_vs_iter:   xi_i trajectories per trace
 *  - relaxation_vs_alpha:  final xi vs sweep value (log-x) with optional
 *                          oscillation error bars per input
 *  - policy_arrows:        grid quiver of a policy CSV's argmax actions
 */

import { mkdirSync, readFileSync, writeFileSync } from "fs";
import * as path from "path";

import { CsvSchemaError, Table, familyColumns, readTable, requireColumn } from "./csv";
import { PALETTE, PlotSpec, SeriesSpec, renderPlot, renderQuiver } from "./svg";

export class RecipeError extends Error {}

export interface RecipeInput {
  path: string;
  label?: string;
  /** draw oscillation error bars (relaxation_vs_alpha) */
  errorbars?: boolean;
  /** dashed lines, e.g. for a baseline trace */
  dashed?: boolean;
}

export interface FigureRecipe {
  kind: "convergence" | "relaxation_vs_iter" | "relaxation_vs_alpha" | "policy_arrows";
  inputs: RecipeInput[];
  out: string;
  title?: string;
  /** trace column selectors, e.g. ["v_r", "v_g_1"] (convergence value mode) */
  series?: string[];
  /** oracle optimum: inline number or {"path": "oracle.json"} */
  oracle?: number | { path: string };
  /** grid dimensions for policy_arrows */
  grid?: { width: number; height: number; areas?: number[][] };
}

const KINDS = new Set(["convergence", "relaxation_vs_iter", "relaxation_vs_alpha",
                       "policy_arrows"]);

export function loadRecipe(recipePath: string): FigureRecipe {
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(recipePath, "utf8"));
  } catch (err) {
    throw new RecipeError(`${recipePath}: cannot parse recipe (${(err as Error).message})`);
  }
  const recipe = raw as FigureRecipe;
  if (!recipe || typeof recipe !== "object" || !KINDS.has(recipe.kind)) {
    throw new RecipeError(`${recipePath}: 'kind' must be one of ${[...KINDS].join(", ")}`);
  }
  if (!Array.isArray(recipe.inputs) || recipe.inputs.length === 0) {
    throw new RecipeError(`${recipePath}: 'inputs' must be a non-empty array`);
  }
  if (typeof recipe.out !== "string" || recipe.out.length === 0) {
    throw new RecipeError(`${recipePath}: 'out' must be an image path`);
  }
  const dir = path.dirname(recipePath);
  const resolve = (p: string) => (path.isAbsolute(p) ? p : path.join(dir, p));
  recipe.inputs = recipe.inputs.map((input) =>
    typeof input === "string" ? { path: resolve(input) }
                              : { ...input, path: resolve(input.path) });
  recipe.out = resolve(recipe.out);
  if (recipe.oracle && typeof recipe.oracle === "object") {
    recipe.oracle = { path: resolve(recipe.oracle.path) };
  }
  return recipe;
}

function oracleValue(recipe: FigureRecipe): number {
  if (typeof recipe.oracle === "number") return recipe.oracle;
  if (recipe.oracle && typeof recipe.oracle === "object") {
    const parsed = JSON.parse(readFileSync(recipe.oracle.path, "utf8"));
    if (typeof parsed.primal_value !== "number") {
      throw new RecipeError(`${recipe.oracle.path}: oracle report lacks primal_value`);
    }
    return parsed.primal_value;
  }
  throw new RecipeError("convergence gap mode needs an 'oracle' value or report path");
}

function label(input: RecipeInput, fallback: string): string {
  return input.label ?? fallback;
}

function renderConvergence(recipe: FigureRecipe): string {
  const series: SeriesSpec[] = [];
  if (recipe.series && recipe.series.length > 0) {
    // value mode: one curve per (trace, selected column)
    recipe.inputs.forEach((input, i) => {
      const table = readTable(input.path);
      const iters = requireColumn(table, "iter");
      recipe.series!.forEach((name, j) => {
        series.push({
          x: iters,
          y: requireColumn(table, name),
          label: `${label(input, path.basename(input.path))} ${name}`,
          color: PALETTE[(i * recipe.series!.length + j) % PALETTE.length],
          dashed: input.dashed,
        });
      });
    });
    return renderPlot({
      title: recipe.title ?? "value convergence",
      xLabel: "iteration", yLabel: "value",
      xKind: "linear", yKind: "linear", series,
    });
  }
  const vStar = oracleValue(recipe);
  recipe.inputs.forEach((input, i) => {
    const table = readTable(input.path);
    const iters = requireColumn(table, "iter");
    const vR = requireColumn(table, "v_r");
    const h = requireColumn(table, "h");
    const gap = vR.map((v, k) => Math.max(vStar - (v - h[k]), 1e-12));
    series.push({
      x: iters, y: gap,
      label: label(input, path.basename(input.path)),
      color: PALETTE[i % PALETTE.length],
      dashed: input.dashed,
    });
  });
  return renderPlot({
    title: recipe.title ?? "optimality gap",
    xLabel: "iteration", yLabel: "optimality gap",
    xKind: "linear", yKind: "log", series,
  });
}

function renderRelaxationVsIter(recipe: FigureRecipe): string {
  const series: SeriesSpec[] = [];
  let colorIndex = 0;
  recipe.inputs.forEach((input) => {
    const table = readTable(input.path);
    const iters = requireColumn(table, "iter");
    const xis = familyColumns(table, "xi_");
    if (xis.length === 0) {
      throw new CsvSchemaError(`${input.path}: no xi_i columns found`);
    }
    xis.forEach((column, j) => {
      series.push({
        x: iters, y: column,
        label: `${label(input, path.basename(input.path))} xi_${j + 1}`,
        color: PALETTE[colorIndex++ % PALETTE.length],
        dashed: input.dashed,
      });
    });
  });
  return renderPlot({
    title: recipe.title ?? "relaxation trajectories",
    xLabel: "iteration", yLabel: "relaxation",
    xKind: "linear", yKind: "linear", series,
  });
}

function renderRelaxationVsAlpha(recipe: FigureRecipe): string {
  const series: SeriesSpec[] = [];
  let colorIndex = 0;
  recipe.inputs.forEach((input) => {
    const table = readTable(input.path);
    const values = requireColumn(table, "value");
    const finals = familyColumns(table, "final_xi_");
    const oscs = familyColumns(table, "osc_xi_");
    if (finals.length === 0) {
      throw new CsvSchemaError(`${input.path}: no final_xi_i columns found`);
    }
    finals.forEach((column, j) => {
      series.push({
        x: values, y: column,
        label: `${label(input, path.basename(input.path))} xi_${j + 1}`,
        color: PALETTE[colorIndex++ % PALETTE.length],
        markers: true,
        bars: input.errorbars && oscs[j] ? oscs[j] : undefined,
      });
    });
  });
  return renderPlot({
    title: recipe.title ?? "relaxation vs cost weight",
    xLabel: "relaxation cost weight", yLabel: "final relaxation",
    xKind: "log", yKind: "linear", series,
  });
}

const ARROW_ANGLES = [Math.PI, 0, -Math.PI / 2, Math.PI / 2]; // left right up down

function renderPolicyArrows(recipe: FigureRecipe): string {
  if (!recipe.grid || !recipe.grid.width || !recipe.grid.height) {
    throw new RecipeError("policy_arrows needs grid: {width, height}");
  }
  const { width, height } = recipe.grid;
  const table = readTable(recipe.inputs[0].path);
  requireColumn(table, "state");
  const probs: number[][] = [];
  for (let a = 0; ; a++) {
    const col = table.columns.get(`p_${a}`);
    if (col === undefined) break;
    probs.push(col);
  }
  if (probs.length !== 4) {
    throw new CsvSchemaError(
      `${recipe.inputs[0].path}: policy_arrows expects 4 action columns p_0..p_3, found ${probs.length}`);
  }
  if (table.rows !== width * height) {
    throw new RecipeError(
      `policy has ${table.rows} states but grid is ${width}x${height}`);
  }
  const angles: Array<number | null> = [];
  for (let s = 0; s < table.rows; s++) {
    let best = 0;
    for (let a = 1; a < 4; a++) {
      if (probs[a][s] > probs[best][s]) best = a;
    }
    angles.push(ARROW_ANGLES[best]);
  }
  const mask = new Array<number>(width * height).fill(0);
  (recipe.grid.areas ?? []).forEach((rect, idx) => {
    const [r0, r1, c0, c1] = rect;
    for (let r = r0; r <= r1; r++) {
      for (let c = c0; c <= c1; c++) mask[r * width + c] = idx + 1;
    }
  });
  return renderQuiver(recipe.title ?? "policy", width, height, angles, mask);
}

export function renderRecipe(recipe: FigureRecipe): string {
  switch (recipe.kind) {
    case "convergence": return renderConvergence(recipe);
    case "relaxation_vs_iter": return renderRelaxationVsIter(recipe);
    case "relaxation_vs_alpha": return renderRelaxationVsAlpha(recipe);
    case "policy_arrows": return renderPolicyArrows(recipe);
  }
}

export function runRecipeFile(recipePath: string): string {
  const recipe = loadRecipe(recipePath);
  const svg = renderRecipe(recipe);
  mkdirSync(path.dirname(recipe.out), { recursive: true });
  writeFileSync(recipe.out, svg);
  return recipe.out;
}
