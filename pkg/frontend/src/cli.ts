#!/usr/bin/env node
import { parseArgs } from "node:util";

import { FAMILIES, Family, render } from "./figures.js";

function usage(): string {
  return `usage: netmimo-plots --family <${FAMILIES.join("|")}> --input <csv> --output <svg>`;
}

export function main(argv: string[]): number {
  let values: { family?: string; input?: string; output?: string };
  try {
    values = parseArgs({
      args: argv,
      options: {
        family: { type: "string" },
        input: { type: "string" },
        output: { type: "string" },
      },
    }).values;
  } catch (err) {
    console.error(String(err));
    console.error(usage());
    return 2;
  }
  const { family, input, output } = values;
  if (!family || !input || !output) {
    console.error(usage());
    return 2;
  }
  if (!(FAMILIES as readonly string[]).includes(family)) {
    console.error(`unknown family "${family}"`);
    console.error(usage());
    return 2;
  }
  try {
    render({ family: family as Family, input, output });
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    return 1;
  }
  console.log(`wrote ${output}`);
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
