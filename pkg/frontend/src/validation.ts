// Client-side split validation.
//
// Deliberately duplicates the server's rules (conservation plus edge
// legality) so illegal allocations are caught before any network round
// trip; the diagnostic strings are kept byte-identical to the server's so
// client and server rejections always match.

import type { SessionView, Split } from './types.js';

export interface ValidationOk {
  ok: true;
}

export interface ValidationError {
  ok: false;
  error: string;
}

export type ValidationResult = ValidationOk | ValidationError;

function fail(error: string): ValidationError {
  return { ok: false, error };
}

/**
 * Validate an allocation against the current view.
 *
 * Every occupied state must allocate exactly its count, only onto the
 * proposed action's successors; untouched empty states must not appear.
 */
export function validateSplit(view: SessionView, split: Split): ValidationResult {
  const counts = view.counts;
  const legal = view.legalSuccessors;
  for (const [src, moves] of Object.entries(split)) {
    const have = counts[src] ?? 0;
    if (have === 0) {
      return fail(`split moves agents from empty state ${src}`);
    }
    const allowed = new Set(legal[src] ?? []);
    let total = 0;
    for (const [dst, k] of Object.entries(moves)) {
      if (k < 0) {
        return fail(`negative agent count at ${src}`);
      }
      if (k > 0 && !allowed.has(dst)) {
        return fail(`illegal move ${src} -> ${dst} on ${view.proposedAction}`);
      }
      total += k;
    }
    if (total !== have) {
      return fail(`conservation violated at ${src}: allocated ${total} of ${have}`);
    }
  }
  for (const [state, count] of Object.entries(counts)) {
    if (count > 0 && !(state in split)) {
      return fail(`no allocation for occupied state ${state}`);
    }
  }
  return { ok: true };
}

/** Remaining agents per occupied state for the allocation hints. */
export function remainders(view: SessionView, split: Split): Record<string, number> {
  const out: Record<string, number> = {};
  for (const [state, count] of Object.entries(view.counts)) {
    if (count === 0) continue;
    let allocated = 0;
    for (const k of Object.values(split[state] ?? {})) {
      allocated += k;
    }
    out[state] = count - allocated;
  }
  return out;
}

/** The even allocation: spread each count, remainder to the earliest listed successors. */
export function evenSplit(view: SessionView): Split {
  const split: Split = {};
  for (const [state, succs] of Object.entries(view.legalSuccessors)) {
    const count = view.counts[state] ?? 0;
    if (count === 0 || succs.length === 0) continue;
    const base = Math.floor(count / succs.length);
    const rem = count % succs.length;
    const alloc: Record<string, number> = {};
    succs.forEach((dst, i) => {
      const k = base + (i < rem ? 1 : 0);
      if (k > 0) alloc[dst] = (alloc[dst] ?? 0) + k;
    });
    split[state] = alloc;
  }
  return split;
}
