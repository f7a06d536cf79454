/**
 * Minimal structural reader for the toolkit's emitted PTX files.
 *
 * The bridge never interprets PTX semantics beyond what launching needs:
 * the entry symbol must match the request, the measured region sits between
 * exactly two cycle-counter reads, and the loop trip count is an immediate
 * on the loop-counter register.
 */

export interface PtxInfo {
  entry: string | null;
  clockReads: number;
  loopIterations: number;
  measuredLines: string[];
}

const ENTRY_RE = /\.visible\s+\.entry\s+([A-Za-z_][\w$]*)/;
const LOOP_COUNTER_RE = /mov\.u32\s+%r6,\s+(\d+)\s*;/;

export function parsePtx(source: string): PtxInfo {
  const entryMatch = ENTRY_RE.exec(source);
  const pieces = source.split("%clock64");
  const clockReads = pieces.length - 1;

  let measuredLines: string[] = [];
  if (clockReads === 2) {
    measuredLines = pieces[1]
      .split("\n")
      .map((l) => l.trim())
      .filter((l) => l.endsWith(";"));
    // drop the tail of the first clock-read statement itself
    if (measuredLines.length && measuredLines[0] === ";") measuredLines.shift();
  }

  const loopMatch = LOOP_COUNTER_RE.exec(source);
  return {
    entry: entryMatch ? entryMatch[1] : null,
    clockReads,
    loopIterations: loopMatch ? parseInt(loopMatch[1], 10) : 1,
    measuredLines,
  };
}

/** Opcode token (first word) of each measured instruction line. */
export function measuredOpcodes(info: PtxInfo): string[] {
  return info.measuredLines
    .map((l) => l.split(/\s+/)[0])
    .filter((op) => op && !op.startsWith("$") && op !== ";");
}
