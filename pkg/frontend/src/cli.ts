import { renderFigure, FigureSpec } from "./figures";

function parseArgs(argv: string[]): FigureSpec {
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    if (!flag.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`usage: --kind <eta1_sweep|tradeoff|bound_vs_montecarlo> --input csv --output svg [--montecarlo csv]`);
    }
    args.set(flag.slice(2), argv[i + 1]);
  }
  const kind = args.get("kind");
  const input = args.get("input");
  const output = args.get("output");
  if (!kind || !input || !output) {
    throw new Error("missing required flags: --kind, --input, --output");
  }
  return {
    kind: kind as FigureSpec["kind"],
    input,
    output,
    montecarlo: args.get("montecarlo"),
  };
}

try {
  const spec = parseArgs(process.argv.slice(2));
  const meta = renderFigure(spec);
  console.log(JSON.stringify(meta));
} catch (err) {
  console.error(`sdqcsim-figures: ${(err as Error).message}`);
  process.exit(2);
}
