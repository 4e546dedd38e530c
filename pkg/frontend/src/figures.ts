import { writeFileSync } from "fs";
import { scaleLinear, scaleLog } from "d3-scale";
import { line as d3line } from "d3-shape";

import { num, readCsv, requireColumns, Row } from "./csv";
import { drawAxes, Frame, legend, SvgDoc } from "./svg";

/** Weak-drive inversion measurements, drawn as reference annotations only. */
export const EXPERIMENTAL_POINTS: ReadonlyArray<[number, number]> = [
  [3.8, 0.62],
  [8.6, 0.81],
];

export interface FigureSpec {
  kind: "eta1_sweep" | "tradeoff" | "bound_vs_montecarlo";
  input: string;
  output: string;
  /** Monte Carlo overlay CSV (gadget-sim schema) for the trade-off figure. */
  montecarlo?: string;
}

export interface SweepMeta {
  crossingAlphaSq: number | null;
  families: string[];
  nRows: number;
}

export interface TradeoffPoint {
  eta1: number;
  alphaSq: number;
  n: number;
  kind: "abort" | "sim_error";
  rate: number;
  bound: number;
  onOrBelowBound: boolean;
}

export interface TradeoffMeta {
  curves: { eta1: number; alphaSq: number; points: number }[];
  montecarlo: TradeoffPoint[];
}

const WIDTH = 720;
const HEIGHT = 480;
const FRAME: Frame = { left: 64, right: WIDTH - 20, top: 24, bottom: HEIGHT - 56 };

function sortedBy<T>(rows: T[], key: (r: T) => number): T[] {
  return [...rows].sort((a, b) => key(a) - key(b));
}

/** Linear interpolation (in log-x) of the gap's sign change. */
export function locateCrossing(rows: { alphaSq: number; gap: number }[]): number | null {
  const pts = sortedBy(rows, (r) => r.alphaSq);
  for (let i = 0; i + 1 < pts.length; i++) {
    const a = pts[i];
    const b = pts[i + 1];
    if (a.gap > 0 && b.gap <= 0) {
      const la = Math.log(a.alphaSq);
      const lb = Math.log(b.alphaSq);
      const f = a.gap / (a.gap - b.gap);
      return Math.exp(la + f * (lb - la));
    }
  }
  return null;
}

const SWEEP_COLUMNS = [
  "alpha_sq", "eta1_max", "theta_star", "tau_star",
  "p1", "p2", "gap_emitter", "gap_ideal",
];

export function renderSweepFigure(spec: FigureSpec): SweepMeta {
  const rows = readCsv(spec.input);
  requireColumns(rows, SWEEP_COLUMNS, spec.input);
  const model = (r: Row) => r["model"] ?? "two_level";
  const families = [...new Set(rows.map(model))];
  const twoLevel = sortedBy(rows.filter((r) => model(r) === "two_level"), (r) => num(r, "alpha_sq"));
  if (twoLevel.length === 0) {
    throw new Error(`${spec.input}: no two-level rows to plot`);
  }

  const alphas = rows.map((r) => num(r, "alpha_sq"));
  const x = scaleLog().domain([Math.min(...alphas), Math.max(...alphas)]).range([FRAME.left, FRAME.right]);
  const gaps = rows.map((r) => num(r, "gap_emitter"));
  const yMin = Math.min(0, ...gaps) - 0.05;
  const y = scaleLinear().domain([yMin, 1.0]).range([FRAME.bottom, FRAME.top]);

  const doc = new SvgDoc(WIDTH, HEIGHT);
  drawAxes(doc, FRAME, x, y, "mean photon number per pulse", "probability / gap");
  doc.line(FRAME.left, y(0), FRAME.right, y(0), "#bbb");

  const mkPath = (pts: [number, number][]) =>
    d3line()
      .x((d) => x(d[0]))
      .y((d) => y(d[1]))(pts) ?? "";
  const series = (rs: Row[], col: string): [number, number][] =>
    rs.map((r) => [num(r, "alpha_sq"), num(r, col)]);

  // coherent-state ceilings (solid), emitter curves (dashed)
  doc.path(mkPath(series(twoLevel, "p1")), "#a00000");
  doc.path(mkPath(series(twoLevel, "gap_ideal")), "#003080");
  doc.path(mkPath(series(twoLevel, "eta1_max")), "#e03030", { dash: "6,4" });
  doc.path(mkPath(series(twoLevel, "gap_emitter")), "#3060e0", { dash: "6,4" });

  const entries = [
    { label: "single-photon ceiling", color: "#a00000" },
    { label: "ceiling gap", color: "#003080" },
    { label: "emitter efficiency (max)", color: "#e03030", dash: "1" },
    { label: "emitter gap", color: "#3060e0", dash: "1" },
  ];

  const lambdaRows = sortedBy(rows.filter((r) => model(r) === "ideal_lambda"), (r) => num(r, "alpha_sq"));
  if (lambdaRows.length > 0) {
    doc.path(mkPath(series(lambdaRows, "eta1_max")), "#108040", { dash: "2,3" });
    doc.path(mkPath(series(lambdaRows, "gap_emitter")), "#70b010", { dash: "2,3" });
    entries.push({ label: "three-level efficiency", color: "#108040", dash: "1" });
    entries.push({ label: "three-level gap", color: "#70b010", dash: "1" });
  }

  const crossing = locateCrossing(
    twoLevel.map((r) => ({ alphaSq: num(r, "alpha_sq"), gap: num(r, "gap_emitter") }))
  );
  if (crossing !== null) {
    doc.line(x(crossing), FRAME.top, x(crossing), FRAME.bottom, "#000", 1.5);
    doc.text(x(crossing) + 4, FRAME.top + 12, `amplification limit ${crossing.toFixed(2)}`);
  }

  for (const [a, eta] of EXPERIMENTAL_POINTS) {
    if (a >= x.domain()[0] && a <= x.domain()[1]) {
      doc.circle(x(a), y(eta), 4, "#222");
      doc.text(x(a) + 6, y(eta) + 4, `measured (${a}, ${eta})`);
    }
  }
  legend(doc, FRAME, entries);
  writeFileSync(spec.output, doc.render());
  return { crossingAlphaSq: crossing, families, nRows: rows.length };
}

const TRADEOFF_COLUMNS = ["alpha_sq", "eta1", "n", "eps_cor", "eps_sec", "eps"];
const MC_COLUMNS = ["alpha_sq", "eta1", "n", "runs", "abort_rate", "sim_error_rate"];

const CURVE_COLORS = ["#28508c", "#a03028", "#208858", "#806010", "#703880"];

export function renderTradeoffFigure(spec: FigureSpec): TradeoffMeta {
  const rows = readCsv(spec.input);
  requireColumns(rows, TRADEOFF_COLUMNS, spec.input);
  const groups = new Map<string, Row[]>();
  for (const r of rows) {
    const key = `${r["eta1"]}|${r["alpha_sq"]}`;
    groups.set(key, [...(groups.get(key) ?? []), r]);
  }

  const mcRows = spec.montecarlo ? readCsv(spec.montecarlo) : [];
  if (spec.montecarlo) requireColumns(mcRows, MC_COLUMNS, spec.montecarlo);

  const ns = rows.map((r) => num(r, "n"));
  const positives = [
    ...rows.map((r) => num(r, "eps")).filter((v) => v > 0),
    ...mcRows.flatMap((r) => [num(r, "abort_rate"), num(r, "sim_error_rate")]).filter((v) => v > 0),
  ];
  const floor = Math.max(1e-18, Math.min(...positives, 1) / 10);
  const x = scaleLinear().domain([Math.min(...ns), Math.max(...ns)]).range([FRAME.left, FRAME.right]);
  const y = scaleLog().domain([floor, 1]).range([FRAME.bottom, FRAME.top]);
  const clampY = (v: number) => y(Math.max(v, floor));

  const doc = new SvgDoc(WIDTH, HEIGHT);
  drawAxes(doc, FRAME, x, y, "pulses per gadget", "bound / empirical rate",
    undefined, y.ticks(8).filter((t) => Math.abs(Math.log10(t) % 3) < 1e-9 || t === 1));

  const meta: TradeoffMeta = { curves: [], montecarlo: [] };
  const boundAt = new Map<string, number>();
  let colorIdx = 0;
  const entries: { label: string; color: string; dash?: string }[] = [];
  for (const [key, group] of groups) {
    const pts = sortedBy(group, (r) => num(r, "n"));
    const color = CURVE_COLORS[colorIdx++ % CURVE_COLORS.length];
    const path = d3line<Row>()
      .x((r) => x(num(r, "n")))
      .y((r) => clampY(num(r, "eps")))(pts);
    doc.path(path ?? "", color, { width: 2 });
    for (const r of pts) {
      boundAt.set(`${key}|${r["n"]}`, num(r, "eps"));
    }
    const [eta1, alphaSq] = key.split("|").map(Number);
    meta.curves.push({ eta1, alphaSq, points: pts.length });
    entries.push({ label: `bound eta1=${eta1}, intensity=${alphaSq}`, color });
  }

  for (const r of mcRows) {
    const key = `${r["eta1"]}|${r["alpha_sq"]}`;
    const bound = boundAt.get(`${key}|${r["n"]}`);
    if (bound === undefined) {
      throw new Error(
        `${spec.montecarlo}: no bound row matches eta1=${r["eta1"]}, ` +
          `alpha_sq=${r["alpha_sq"]}, n=${r["n"]}`
      );
    }
    for (const [col, kind] of [["abort_rate", "abort"], ["sim_error_rate", "sim_error"]] as const) {
      const rate = num(r, col);
      if (Number.isNaN(rate)) continue;
      const px = x(num(r, "n"));
      const py = clampY(rate);
      if (kind === "abort") doc.circle(px, py, 3.5, "#222");
      else doc.raw(`<rect x="${(px - 3).toFixed(2)}" y="${(py - 3).toFixed(2)}" width="6" height="6" fill="#888"/>`);
      meta.montecarlo.push({
        eta1: num(r, "eta1"),
        alphaSq: num(r, "alpha_sq"),
        n: num(r, "n"),
        kind,
        rate,
        bound,
        onOrBelowBound: rate <= bound,
      });
    }
  }
  entries.push({ label: "empirical abort rate", color: "#222" });
  entries.push({ label: "empirical simulator error", color: "#888" });
  legend(doc, FRAME, entries);
  writeFileSync(spec.output, doc.render());
  return meta;
}

export function renderFigure(spec: FigureSpec): SweepMeta | TradeoffMeta {
  if (spec.kind === "eta1_sweep") return renderSweepFigure(spec);
  if (spec.kind === "tradeoff" || spec.kind === "bound_vs_montecarlo") {
    if (spec.kind === "bound_vs_montecarlo" && !spec.montecarlo) {
      throw new Error("bound_vs_montecarlo needs --montecarlo CSV");
    }
    return renderTradeoffFigure(spec);
  }
  throw new Error(`unknown figure kind ${JSON.stringify(spec.kind)}`);
}
