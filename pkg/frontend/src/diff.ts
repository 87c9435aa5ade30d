// Word-level diff for metadata review. LCS over whitespace-separated tokens;
// runs of inserted tokens are exactly what a description injection adds.

export type SegmentKind = "same" | "ins" | "del";

export interface DiffSegment {
  kind: SegmentKind;
  text: string;
}

function tokenize(text: string): string[] {
  return text.split(/\s+/).filter((t) => t.length > 0);
}

export function wordDiff(before: string, after: string): DiffSegment[] {
  const a = tokenize(before);
  const b = tokenize(after);
  const rows = a.length + 1;
  const cols = b.length + 1;
  const lcs: number[][] = Array.from({ length: rows }, () => new Array(cols).fill(0));
  for (let i = a.length - 1; i >= 0; i--) {
    for (let j = b.length - 1; j >= 0; j--) {
      lcs[i][j] = a[i] === b[j] ? lcs[i + 1][j + 1] + 1 : Math.max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }

  const segments: DiffSegment[] = [];
  const push = (kind: SegmentKind, token: string) => {
    const last = segments[segments.length - 1];
    if (last && last.kind === kind) {
      last.text += ` ${token}`;
    } else {
      segments.push({ kind, text: token });
    }
  };

  let i = 0;
  let j = 0;
  while (i < a.length && j < b.length) {
    if (a[i] === b[j]) {
      push("same", a[i]);
      i++;
      j++;
    } else if (lcs[i + 1][j] >= lcs[i][j + 1]) {
      push("del", a[i]);
      i++;
    } else {
      push("ins", b[j]);
      j++;
    }
  }
  while (i < a.length) push("del", a[i++]);
  while (j < b.length) push("ins", b[j++]);
  return segments;
}

export function insertedText(segments: DiffSegment[]): string {
  return segments
    .filter((s) => s.kind === "ins")
    .map((s) => s.text)
    .join(" ");
}
