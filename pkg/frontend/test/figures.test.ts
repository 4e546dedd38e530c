import { mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

import {
  locateCrossing,
  renderFigure,
  renderSweepFigure,
  renderTradeoffFigure,
  SweepMeta,
  TradeoffMeta,
} from "../src/figures";
import { readCsv, requireColumns } from "../src/csv";

const FIXTURES = join(__dirname, "fixtures");
const out = () => join(mkdtempSync(join(tmpdir(), "fig-")), "figure.svg");

// The amplification ceiling reported by the simulation package's physics
// endpoint; the rendered marker must land on it.
const CROSSING_ALPHA_SQ = 2.5;

describe("sweep figure", () => {
  it("places the crossing marker at the physics-endpoint intensity", () => {
    const output = out();
    const meta = renderSweepFigure({
      kind: "eta1_sweep",
      input: join(FIXTURES, "sweep.csv"),
      output,
    }) as SweepMeta;
    expect(meta.crossingAlphaSq).not.toBeNull();
    expect(Math.abs((meta.crossingAlphaSq as number) - CROSSING_ALPHA_SQ)).toBeLessThan(0.1);
    const svg = readFileSync(output, "utf8");
    expect(svg).toContain("<svg");
    expect(svg).toContain("amplification limit");
    expect(svg).toContain("measured (3.8, 0.62)");
    expect(svg).toContain("measured (8.6, 0.81)");
  });

  it("renders both curve families when lambda-model rows are present", () => {
    const meta = renderSweepFigure({
      kind: "eta1_sweep",
      input: join(FIXTURES, "sweep_both.csv"),
      output: out(),
    }) as SweepMeta;
    expect(meta.families.sort()).toEqual(["ideal_lambda", "two_level"]);
  });

  it("rejects an empty CSV instead of drawing an empty figure", () => {
    const empty = join(mkdtempSync(join(tmpdir(), "fig-")), "empty.csv");
    writeFileSync(empty, "alpha_sq,eta1_max\n");
    expect(() =>
      renderSweepFigure({ kind: "eta1_sweep", input: empty, output: out() })
    ).toThrow(/no data rows/);
  });

  it("names missing columns", () => {
    const bad = join(mkdtempSync(join(tmpdir(), "fig-")), "bad.csv");
    writeFileSync(bad, "alpha_sq,eta1_max\n1.0,0.5\n");
    expect(() =>
      renderSweepFigure({ kind: "eta1_sweep", input: bad, output: out() })
    ).toThrow(/missing required columns: .*gap_emitter/);
  });
});

describe("trade-off figure", () => {
  it("overlays Monte Carlo points that all sit on or below the bound curves", () => {
    const meta = renderTradeoffFigure({
      kind: "bound_vs_montecarlo",
      input: join(FIXTURES, "bounds.csv"),
      output: out(),
      montecarlo: join(FIXTURES, "gadget_mc.csv"),
    }) as TradeoffMeta;
    expect(meta.curves.length).toBeGreaterThan(0);
    expect(meta.montecarlo.length).toBeGreaterThan(0);
    for (const point of meta.montecarlo) {
      expect(point.onOrBelowBound, `${point.kind} at n=${point.n}`).toBe(true);
    }
  });

  it("draws the bound curve as a straight exponential decay on the log axis", () => {
    const rows = readCsv(join(FIXTURES, "bounds.csv"));
    requireColumns(rows, ["n", "eps"], "bounds.csv");
    // slope of log(eps) vs n must be constant (= -nu)
    const pts = rows
      .map((r) => [Number(r["n"]), Math.log(Number(r["eps"]))])
      .sort((a, b) => a[0] - b[0]);
    const slopes: number[] = [];
    for (let i = 0; i + 1 < pts.length; i++) {
      slopes.push((pts[i + 1][1] - pts[i][1]) / (pts[i + 1][0] - pts[i][0]));
    }
    for (const s of slopes) {
      expect(Math.abs(s - slopes[0])).toBeLessThan(1e-9);
    }
  });

  it("fails loudly when Monte Carlo rows lack a matching bound row", () => {
    const dir = mkdtempSync(join(tmpdir(), "fig-"));
    const mc = join(dir, "mc.csv");
    const header =
      "protocol,alpha_sq,eta1,n,t,runs,abort_rate,sim_error_rate,eps_cor,eps_sec,eps,eps_post";
    writeFileSync(mc, `${header}\nthreshold,0.5,0.8,10,5,100,0,0,1,1,1,\n`);
    expect(() =>
      renderTradeoffFigure({
        kind: "tradeoff",
        input: join(FIXTURES, "bounds.csv"),
        output: out(),
        montecarlo: mc,
      })
    ).toThrow(/no bound row matches/);
  });

  it("works without an overlay file", () => {
    const meta = renderTradeoffFigure({
      kind: "tradeoff",
      input: join(FIXTURES, "bounds.csv"),
      output: out(),
    }) as TradeoffMeta;
    expect(meta.montecarlo).toEqual([]);
  });
});

describe("dispatch", () => {
  it("requires the overlay for bound_vs_montecarlo", () => {
    expect(() =>
      renderFigure({
        kind: "bound_vs_montecarlo",
        input: join(FIXTURES, "bounds.csv"),
        output: out(),
      })
    ).toThrow(/--montecarlo/);
  });

  it("rejects unknown kinds", () => {
    expect(() =>
      renderFigure({ kind: "pie" as never, input: "x", output: "y" })
    ).toThrow(/unknown figure kind/);
  });
});

describe("crossing interpolation", () => {
  it("interpolates the sign change in log space", () => {
    const rows = [
      { alphaSq: 1.0, gap: 0.2 },
      { alphaSq: 2.0, gap: 0.1 },
      { alphaSq: 4.0, gap: -0.1 },
    ];
    const x = locateCrossing(rows)!;
    expect(x).toBeGreaterThan(2.0);
    expect(x).toBeLessThan(4.0);
    expect(x).toBeCloseTo(Math.exp(Math.log(2) + 0.5 * (Math.log(4) - Math.log(2))), 10);
  });

  it("returns null when the gap never closes", () => {
    expect(locateCrossing([{ alphaSq: 1, gap: 0.3 }, { alphaSq: 2, gap: 0.2 }])).toBeNull();
  });
});
