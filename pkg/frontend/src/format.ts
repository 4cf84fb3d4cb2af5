/**
 * Every number the console displays goes through `show`, which is plain
 * JSON serialization of the payload value: no rounding, no rescaling, no
 * unit conversion. Tests compare rendered strings against the payload
 * byte-for-byte through this same function.
 */
export function show(value: number | string): string {
  return typeof value === 'string' ? value : JSON.stringify(value);
}

/** Seconds label composed of the verbatim value plus a unit suffix. */
export function seconds(value: number): string {
  return `${show(value)} s`;
}

/** Speed label, e.g. "1x" or "8x". */
export function speed(value: number): string {
  return `${show(value)}x`;
}
