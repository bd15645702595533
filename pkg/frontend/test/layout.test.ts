import { describe, expect, it } from 'vitest';

import { computeLayout, mulberry32 } from '../src/layout.js';
import { SPLIT_NFA } from './fake-server.js';

describe('deterministic layout', () => {
  it('same automaton and seed give identical positions', () => {
    const a = computeLayout(SPLIT_NFA, 640, 420, 7);
    const b = computeLayout(SPLIT_NFA, 640, 420, 7);
    expect(a).toEqual(b);
  });

  it('different seeds move the nodes', () => {
    const a = computeLayout(SPLIT_NFA, 640, 420, 7);
    const b = computeLayout(SPLIT_NFA, 640, 420, 8);
    expect(a).not.toEqual(b);
  });

  it('keeps every node inside the viewport', () => {
    const layout = computeLayout(SPLIT_NFA, 640, 420, 7);
    for (const p of Object.values(layout)) {
      expect(p.x).toBeGreaterThanOrEqual(40);
      expect(p.x).toBeLessThanOrEqual(600);
      expect(p.y).toBeGreaterThanOrEqual(40);
      expect(p.y).toBeLessThanOrEqual(380);
    }
  });

  it('prng is stable', () => {
    const rng = mulberry32(42);
    const first = [rng(), rng(), rng()];
    const rng2 = mulberry32(42);
    expect([rng2(), rng2(), rng2()]).toEqual(first);
  });
});
