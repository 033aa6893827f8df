import { LabelValue } from "./api.js";

export const KEY_BINDINGS: ReadonlyArray<readonly [string, LabelValue]> = [
  ["1", "helpful"],
  ["2", "harmful"],
  ["3", "neither"],
];

const BY_KEY = new Map(KEY_BINDINGS);

export function labelForKey(key: string): LabelValue | null {
  return BY_KEY.get(key) ?? null;
}

export function keyForLabel(label: LabelValue): string {
  for (const [key, value] of KEY_BINDINGS) {
    if (value === label) return key;
  }
  throw new Error(`no key bound for ${label}`);
}
