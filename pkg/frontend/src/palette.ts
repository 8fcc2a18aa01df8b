/** Choropleth palettes and quantile classification. */

export interface Palette {
  name: string;
  /** Five ordered color stops, light to dark. */
  stops: [string, string, string, string, string];
  /** Safe for common color-vision deficiencies. */
  colorblindSafe: boolean;
}

export const NO_DATA_FILL = "#d9d9d9";

export const PALETTES: Palette[] = [
  {
    // sequential multi-hue, CVD-safe (viridis samples)
    name: "viridis",
    stops: ["#fde725", "#5ec962", "#21918c", "#3b528b", "#440154"],
    colorblindSafe: true,
  },
  {
    name: "blues",
    stops: ["#eff3ff", "#bdd7e7", "#6baed6", "#3182bd", "#08519c"],
    colorblindSafe: true,
  },
  {
    name: "heat",
    stops: ["#ffffb2", "#fecc5c", "#fd8d3c", "#f03b20", "#bd0026"],
    colorblindSafe: false,
  },
];

export function getPalette(name: string): Palette {
  const p = PALETTES.find((x) => x.name === name);
  if (!p) throw new Error(`unknown palette ${name}`);
  return p;
}

/**
 * Quantile break points dividing the values into five classes.
 * Returns the four interior breaks (upper bounds of classes 0..3).
 */
export function quantileBreaks(values: number[]): number[] {
  const sorted = values.filter((v) => Number.isFinite(v)).sort((a, b) => a - b);
  if (sorted.length === 0) return [];
  const breaks: number[] = [];
  for (let k = 1; k < 5; k++) {
    const idx = Math.min(sorted.length - 1, Math.floor((k * sorted.length) / 5));
    breaks.push(sorted[idx]!);
  }
  return breaks;
}

/** Class index 0..4 for a value against interior breaks (empty breaks → 0). */
export function classify(value: number, breaks: number[]): number {
  let cls = 0;
  for (const b of breaks) {
    if (value >= b) cls++;
  }
  return Math.min(cls, 4);
}

export function colorFor(value: number | null, breaks: number[], palette: Palette): string {
  if (value === null || !Number.isFinite(value)) return NO_DATA_FILL;
  return palette.stops[classify(value, breaks)]!;
}
