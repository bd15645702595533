import { describe, expect, it } from 'vitest';

import type { SessionView, Split } from '../src/types.js';
import { evenSplit, remainders, validateSplit } from '../src/validation.js';

function splitView(counts: Record<string, number>): SessionView {
  const legal: Record<string, string[]> = {};
  const successors: Record<string, string[]> = {
    q0: ['q1', 'q2'],
    q1: ['q1'],
    q2: ['q2'],
    f: ['f'],
  };
  for (const [state, count] of Object.entries(counts)) {
    if (count > 0) legal[state] = successors[state];
  }
  return {
    id: 's',
    m: Object.values(counts).reduce((a, b) => a + b, 0),
    counts,
    proposedAction: 'delta',
    legalSuccessors: legal,
    status: 'Running',
    step: 0,
  };
}

describe('validateSplit', () => {
  it('accepts a full even allocation', () => {
    const view = splitView({ q0: 4, q1: 0, q2: 0, f: 0 });
    expect(validateSplit(view, { q0: { q1: 2, q2: 2 } })).toEqual({ ok: true });
  });

  it('reports conservation with the server wording', () => {
    const view = splitView({ q0: 4, q1: 0, q2: 0, f: 0 });
    const verdict = validateSplit(view, { q0: { q1: 2, q2: 1 } });
    expect(verdict).toEqual({
      ok: false,
      error: 'conservation violated at q0: allocated 3 of 4',
    });
  });

  it('reports illegal edges with the server wording', () => {
    const view = splitView({ q0: 4, q1: 0, q2: 0, f: 0 });
    const verdict = validateSplit(view, { q0: { f: 4 } });
    expect(verdict).toEqual({
      ok: false,
      error: 'illegal move q0 -> f on delta',
    });
  });

  it('rejects allocations onto non-successors before totals are checked', () => {
    const view = splitView({ q0: 2, q1: 0, q2: 0, f: 0 });
    const verdict = validateSplit(view, { q0: { q1: 1, f: 1 } });
    expect(verdict.ok).toBe(false);
    expect((verdict as { error: string }).error).toContain('illegal move q0 -> f');
  });

  it('requires every occupied state to allocate', () => {
    const view = splitView({ q0: 2, q1: 1, q2: 0, f: 0 });
    const verdict = validateSplit(view, { q0: { q1: 1, q2: 1 } });
    expect(verdict).toEqual({
      ok: false,
      error: 'no allocation for occupied state q1',
    });
  });

  it('rejects moves from empty states and negative counts', () => {
    const view = splitView({ q0: 2, q1: 0, q2: 0, f: 0 });
    expect(validateSplit(view, { q0: { q1: 2 }, q2: { q2: 0 } })).toEqual({
      ok: false,
      error: 'split moves agents from empty state q2',
    });
    expect(validateSplit(view, { q0: { q1: 3, q2: -1 } })).toEqual({
      ok: false,
      error: 'negative agent count at q0',
    });
  });

  it('computes remainder hints', () => {
    const view = splitView({ q0: 4, q1: 0, q2: 0, f: 0 });
    expect(remainders(view, { q0: { q1: 1 } })).toEqual({ q0: 3 });
    expect(remainders(view, {})).toEqual({ q0: 4 });
  });

  it('evenSplit always validates', () => {
    for (const counts of [
      { q0: 4, q1: 0, q2: 0, f: 0 },
      { q0: 1, q1: 2, q2: 0, f: 3 },
      { q0: 7, q1: 1, q2: 1, f: 0 },
    ]) {
      const view = splitView(counts);
      expect(validateSplit(view, evenSplit(view))).toEqual({ ok: true });
    }
  });
});

// Property check: the production validator agrees with an independently
// written oracle on seeded random allocations (legal and broken alike).

function mulberry(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function oracleAccepts(view: SessionView, split: Split): boolean {
  // every occupied state allocates exactly its count onto legal successors;
  // nothing else appears
  const states = new Set(Object.keys(view.counts));
  for (const src of Object.keys(split)) {
    if (!states.has(src)) return false;
    if ((view.counts[src] ?? 0) === 0) return false;
  }
  for (const [state, count] of Object.entries(view.counts)) {
    if (count === 0) continue;
    const moves = split[state];
    if (!moves) return false;
    let total = 0;
    for (const [dst, k] of Object.entries(moves)) {
      if (k < 0) return false;
      if (k > 0 && !(view.legalSuccessors[state] ?? []).includes(dst)) return false;
      total += k;
    }
    if (total !== count) return false;
  }
  return true;
}

describe('validateSplit vs oracle', () => {
  it('agrees on 500 generated allocations', () => {
    const rng = mulberry(20240809);
    const allStates = ['q0', 'q1', 'q2', 'f'];
    for (let trial = 0; trial < 500; trial++) {
      const counts: Record<string, number> = {};
      for (const s of allStates) counts[s] = Math.floor(rng() * 4);
      if (Object.values(counts).every((c) => c === 0)) counts['q0'] = 1;
      const view = splitView(counts);
      const split: Split = {};
      for (const s of allStates) {
        if (rng() < 0.15) continue; // sometimes skip a state entirely
        if ((counts[s] ?? 0) === 0 && rng() < 0.9) continue;
        const succs = view.legalSuccessors[s] ?? ['q1', 'f'];
        const alloc: Record<string, number> = {};
        let left = counts[s];
        for (const dst of succs) {
          const k = Math.floor(rng() * (left + 2)) - (rng() < 0.05 ? 1 : 0);
          alloc[dst] = k;
          left -= Math.max(k, 0);
        }
        if (rng() < 0.1) alloc['f'] = Math.floor(rng() * 2); // maybe illegal edge
        split[s] = alloc;
      }
      const verdict = validateSplit(view, split);
      expect(verdict.ok, JSON.stringify({ counts, split, verdict })).toBe(
        oracleAccepts(view, split),
      );
    }
  });
});
