// Bootstrap: wire the session state, the board, and the allocation form.

import { ApiError, HttpTransport, SessionApi } from './api.js';
import { boardViewModel, prefillSplit, renderBoard } from './board.js';
import { computeLayout, type Layout } from './layout.js';
import { SessionState } from './state.js';
import type { Split } from './types.js';

const SPLIT_GADGET = `states: q0 q1 q2 f
init: q0
target: f
alphabet: a b delta
q0 a q0
q0 b q0
q0 delta q1
q0 delta q2
q1 a f
q1 b q0
q1 delta q1
q2 a q0
q2 b f
q2 delta q2
f a f
f b f
f delta f
`;

const state = new SessionState(new SessionApi(new HttpTransport()));
let layout: Layout = {};
let split: Split = {};

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

function toast(message: string, retry?: () => void): void {
  const box = el<HTMLDivElement>('toast');
  box.innerHTML = '';
  box.textContent = message;
  if (retry) {
    const button = document.createElement('button');
    button.textContent = 'retry';
    button.onclick = () => {
      box.classList.add('hidden');
      retry();
    };
    box.appendChild(button);
  }
  box.classList.remove('hidden');
  if (!retry) {
    setTimeout(() => box.classList.add('hidden'), 4000);
  }
}

function redraw(): void {
  const view = state.view;
  const nfa = state.nfa;
  if (!view || !nfa) return;
  const vm = boardViewModel(nfa, view, split);
  const board = document.getElementById('board');
  if (!board) throw new Error('missing element #board');
  renderBoard(board as unknown as SVGSVGElement, vm, layout);

  el<HTMLSpanElement>('step').textContent = String(view.step);
  el<HTMLSpanElement>('proposal').textContent = vm.proposedAction ?? '—';
  const banner = el<HTMLDivElement>('banner');
  banner.classList.toggle('hidden', !vm.wonBanner);
  if (vm.wonBanner) {
    banner.textContent = `All ${view.m} agents reached ${nfa.target} in ${view.step} moves — the controller wins.`;
  }

  const form = el<HTMLDivElement>('allocations');
  form.innerHTML = '';
  for (const row of vm.rows) {
    const box = document.createElement('div');
    box.className = 'alloc-row';
    const title = document.createElement('strong');
    title.textContent = `${row.state} (${row.count} agents)`;
    box.appendChild(title);
    if (row.fixed) {
      const note = document.createElement('span');
      note.textContent = ` → ${row.successors[0]}`;
      box.appendChild(note);
    } else {
      for (const dst of row.successors) {
        const label = document.createElement('label');
        label.textContent = ` ${dst}: `;
        const input = document.createElement('input');
        input.type = 'number';
        input.min = '0';
        input.value = String(split[row.state]?.[dst] ?? 0);
        input.onchange = () => {
          split[row.state] = split[row.state] ?? {};
          split[row.state][dst] = Number(input.value);
          redraw();
        };
        label.appendChild(input);
        box.appendChild(label);
      }
      if (row.remainder !== 0) {
        const hint = document.createElement('span');
        hint.className = 'hint';
        hint.textContent =
          row.remainder > 0
            ? ` ${row.remainder} left to place`
            : ` ${-row.remainder} too many`;
        box.appendChild(hint);
      }
    }
    form.appendChild(box);
  }

  const submit = el<HTMLButtonElement>('submit');
  submit.disabled = !vm.submitEnabled;
  el<HTMLSpanElement>('validation').textContent = vm.validationError ?? '';
  el<HTMLButtonElement>('undo').disabled = view.step === 0;
}

async function start(): Promise<void> {
  const text = el<HTMLTextAreaElement>('nfa-text').value;
  const m = Number(el<HTMLInputElement>('m-input').value);
  try {
    const view = await state.create(text, m);
    layout = computeLayout(state.nfa!, 640, 420, 7);
    split = prefillSplit(view);
    el<HTMLDivElement>('game').classList.remove('hidden');
    redraw();
  } catch (err) {
    if (err instanceof ApiError) {
      toast(err.detail);
    } else {
      toast(`server unreachable: ${err}`, () => void start());
    }
  }
}

async function submitMove(): Promise<void> {
  try {
    const view = await state.move(split);
    split = prefillSplit(view);
    redraw();
  } catch (err) {
    if (err instanceof ApiError && err.status === 422) {
      toast(err.detail);
    } else {
      toast(`move failed: ${err}`, () => void submitMove());
    }
  }
}

async function undoMove(): Promise<void> {
  try {
    const view = await state.undo();
    split = prefillSplit(view);
    redraw();
  } catch (err) {
    toast(`undo failed: ${err}`);
  }
}

function init(): void {
  el<HTMLTextAreaElement>('nfa-text').value = SPLIT_GADGET;
  el<HTMLButtonElement>('start').onclick = () => void start();
  el<HTMLButtonElement>('submit').onclick = () => void submitMove();
  el<HTMLButtonElement>('undo').onclick = () => void undoMove();
  el<HTMLButtonElement>('even').onclick = () => {
    const view = state.view;
    if (!view) return;
    import('./validation.js').then(({ evenSplit }) => {
      split = evenSplit(view);
      redraw();
    });
  };
}

document.addEventListener('DOMContentLoaded', init);
