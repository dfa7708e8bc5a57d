// Rendering helpers. Numbers are server values formatted for display; no
// metric arithmetic happens here or anywhere else in the client.

export function fmt4(value: number | null | undefined): string {
  return value === null || value === undefined ? "undefined" : value.toFixed(4);
}

export function fmtSigned4(value: number | null | undefined): string {
  if (value === null || value === undefined) return "n/a";
  const text = value.toFixed(4);
  return value >= 0 && !text.startsWith("-") ? `+${text}` : text;
}

export function fmtPct(value: number | null | undefined): string {
  if (value === null || value === undefined) return "n/a";
  const text = (value * 100).toFixed(1);
  return value * 100 >= 0 && !text.startsWith("-") ? `+${text}%` : `${text}%`;
}
