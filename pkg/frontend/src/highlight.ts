/** Applies the service's UTF-8 byte-offset spans to a passage string.
 *
 * JavaScript strings index UTF-16 code units, so byte offsets have to be
 * translated before slicing. The segments always concatenate back to the
 * original text; a span that does not land on character boundaries is
 * ignored rather than corrupting the passage.
 */

export interface Segment {
  text: string;
  marked: boolean;
}

function utf8Length(codePoint: number): number {
  if (codePoint < 0x80) return 1;
  if (codePoint < 0x800) return 2;
  if (codePoint < 0x10000) return 3;
  return 4;
}

/** Map every UTF-8 byte boundary of `text` to its string index. */
export function byteBoundaries(text: string): Map<number, number> {
  const boundaries = new Map<number, number>();
  let byteIndex = 0;
  let charIndex = 0;
  boundaries.set(0, 0);
  for (const char of text) {
    byteIndex += utf8Length(char.codePointAt(0) as number);
    charIndex += char.length;
    boundaries.set(byteIndex, charIndex);
  }
  return boundaries;
}

/** Split `text` into marked and unmarked segments covering the byte spans. */
export function markByteSpans(
  text: string,
  spans: ReadonlyArray<readonly [number, number]>,
): Segment[] {
  const boundaries = byteBoundaries(text);
  const ranges: [number, number][] = [];
  for (const [start, end] of spans) {
    const from = boundaries.get(start);
    const to = boundaries.get(end);
    if (from === undefined || to === undefined || from >= to) continue;
    ranges.push([from, to]);
  }
  ranges.sort((a, b) => a[0] - b[0]);

  const segments: Segment[] = [];
  let cursor = 0;
  for (const [from, to] of ranges) {
    if (from < cursor) continue; // overlap; the service never sends these
    if (from > cursor) {
      segments.push({ text: text.slice(cursor, from), marked: false });
    }
    segments.push({ text: text.slice(from, to), marked: true });
    cursor = to;
  }
  if (cursor < text.length) {
    segments.push({ text: text.slice(cursor), marked: false });
  }
  return segments;
}
