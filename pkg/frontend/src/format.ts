/**
 * Display formatting. Values render with 2 decimals; the raw value
 * always rides along in a title attribute. Stored values are never
 * rounded. Percentages here are layout math only (bar widths), never
 * shown as data the API did not send.
 */

export function fmt2(value: number): string {
  return value.toLocaleString("en-US", { minimumFractionDigits: 2, maximumFractionDigits: 2 });
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** A span showing the 2-decimal form with the raw value in the tooltip. */
export function money(value: number): string {
  return `<span class="num" title="${String(value)}">${fmt2(value)}</span>`;
}

/** Width percentage for bar segments; purely visual. */
export function widthPct(part: number, total: number): number {
  if (!(total > 0)) return 0;
  return Math.max(0, Math.min(100, (part / total) * 100));
}

export function debounce<A extends unknown[]>(fn: (...args: A) => void, waitMs: number): (...args: A) => void {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    if (timer !== undefined) clearTimeout(timer);
    timer = setTimeout(() => fn(...args), waitMs);
  };
}
