#!/usr/bin/env node
import { pathToFileURL } from "node:url";

import yargs from "yargs";

import { render, UsageError } from "./render.js";
import { SchemaError } from "./schema.js";

/** Run the CLI against argv (without the node and script entries). */
export async function main(argv: string[]): Promise<number> {
  let failed = false;
  const parser = yargs(argv)
    .scriptName("jadce-plots")
    .command(
      "render",
      "render a figure from a sweep-table CSV",
      (y) =>
        y
          .option("csv", { type: "string", demandOption: true, describe: "input sweep table" })
          .option("figure", { type: "string", demandOption: true, describe: "figure id" })
          .option("out", { type: "string", demandOption: true, describe: "output SVG path" }),
      (args) => {
        const result = render(args.csv, args.figure, args.out);
        process.stdout.write(`wrote ${result.svgPath} and ${result.sidecarPath}\n`);
      },
    )
    .demandCommand(1, "specify a command (try: render)")
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      if (err) throw err;
      process.stderr.write(`error: ${msg}\n`);
      failed = true;
    });
  try {
    await parser.parse();
  } catch (err) {
    if (err instanceof UsageError || err instanceof SchemaError) {
      process.stderr.write(`error: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
  return failed ? 1 : 0;
}

const isDirectRun =
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href;

if (isDirectRun) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
