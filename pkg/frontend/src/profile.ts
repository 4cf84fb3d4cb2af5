/**
 * Preference draft: category toggles with weight sliders plus a global
 * threshold. Validates against the model's label table; zero-weight or
 * untoggled categories never reach the submitted payload.
 */
import { ProfilePayload } from './types.js';

export interface CategoryDraft {
  name: string;
  selected: boolean;
  weight: number; // slider value in [0, 1]
}

export interface ProfileDraft {
  categories: CategoryDraft[];
  threshold: number;
}

export function emptyDraft(labels: string[]): ProfileDraft {
  return {
    categories: labels.map((name) => ({ name, selected: false, weight: 1.0 })),
    threshold: 0.5,
  };
}

export function draftErrors(draft: ProfileDraft, labels: string[]): string[] {
  const errors: string[] = [];
  const known = new Set(labels);
  for (const c of draft.categories) {
    if (!known.has(c.name)) errors.push(`unknown category ${c.name}`);
    if (c.weight < 0 || c.weight > 1) errors.push(`weight for ${c.name} out of [0, 1]`);
  }
  if (!(draft.threshold > 0 && draft.threshold < 1)) {
    errors.push('threshold must be strictly between 0 and 1');
  }
  if (effectiveCategories(draft).length === 0) {
    errors.push('select at least one category with a positive weight');
  }
  return errors;
}

export function effectiveCategories(draft: ProfileDraft): CategoryDraft[] {
  return draft.categories.filter((c) => c.selected && c.weight > 0);
}

export function canSubmit(draft: ProfileDraft, labels: string[]): boolean {
  return draftErrors(draft, labels).length === 0;
}

/** The exact JSON body POSTed to /summarize. */
export function toPayload(draft: ProfileDraft): ProfilePayload {
  const categories: Record<string, number> = {};
  for (const c of effectiveCategories(draft)) {
    categories[c.name] = c.weight;
  }
  return { categories, threshold: draft.threshold };
}
