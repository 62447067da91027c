#!/usr/bin/env node
import { readFileSync, writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { renderChart } from "./chart.js";
import { SchemaError, SweepKind, checkKind, parseSweepCsv } from "./schema.js";

const USAGE =
  "usage: plot --input <sweep.csv> --kind <snr|pilot> --output <figure.(svg|png)>";

export async function main(argv: string[]): Promise<number> {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        input: { type: "string" },
        kind: { type: "string" },
        output: { type: "string" },
        help: { type: "boolean", short: "h" },
      },
      allowPositionals: false,
    }));
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    console.error(USAGE);
    return 2;
  }
  if (values.help) {
    console.log(USAGE);
    return 0;
  }
  if (!values.input || !values.kind || !values.output) {
    console.error("error: --input, --kind and --output are all required");
    console.error(USAGE);
    return 2;
  }
  if (values.kind !== "snr" && values.kind !== "pilot") {
    console.error(`error: --kind must be 'snr' or 'pilot', got '${values.kind}'`);
    return 2;
  }
  const kind = values.kind as SweepKind;

  let text: string;
  try {
    text = readFileSync(values.input, "utf8");
  } catch (err) {
    console.error(`error: cannot read ${values.input}: ${(err as Error).message}`);
    return 1;
  }

  let svg: string;
  try {
    const rows = parseSweepCsv(text);
    checkKind(rows, kind);
    svg = renderChart(rows, kind);
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 1;
    }
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }

  try {
    if (values.output.toLowerCase().endsWith(".png")) {
      writeFileSync(values.output, await renderPng(svg));
    } else {
      writeFileSync(values.output, svg);
    }
  } catch (err) {
    console.error(`error: cannot write ${values.output}: ${(err as Error).message}`);
    return 1;
  }
  console.log(`wrote ${values.output}`);
  return 0;
}

async function renderPng(svg: string): Promise<Buffer> {
  const { Resvg } = await import("@resvg/resvg-js");
  const resvg = new Resvg(svg, {
    fitTo: { mode: "width", value: 1440 },
    font: {
      loadSystemFonts: true,
      defaultFontFamily: "DejaVu Sans",
    },
  });
  return resvg.render().asPng();
}

const entryUrl = process.argv[1] ? new URL(`file://${process.argv[1]}`).href : "";
if (import.meta.url === entryUrl) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
