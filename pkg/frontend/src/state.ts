// Session state container.
//
// Moves are validated client-side first (same rules and messages as the
// server), then submitted; the server's step counter is compared after
// every call so the board can never silently drift from the session.

import { ApiError, SessionApi } from './api.js';
import type { NfaDescription, SessionView, Split } from './types.js';
import { validateSplit } from './validation.js';

export class DesyncError extends Error {}

export class SessionState {
  view: SessionView | null = null;
  nfa: NfaDescription | null = null;

  constructor(private readonly api: SessionApi) {}

  private adopt(view: SessionView, expectedStep: number | null): SessionView {
    if (expectedStep !== null && view.step !== expectedStep) {
      throw new DesyncError(
        `server is at step ${view.step}, client expected ${expectedStep}`,
      );
    }
    if (view.nfa) {
      this.nfa = view.nfa;
    }
    this.view = view;
    return view;
  }

  async create(nfaText: string, m: number): Promise<SessionView> {
    const view = await this.api.create(nfaText, m);
    return this.adopt(view, 0);
  }

  /** Validate locally, then submit.  Local rejections never hit the API. */
  async move(split: Split): Promise<SessionView> {
    if (!this.view) throw new Error('no session');
    const verdict = validateSplit(this.view, split);
    if (!verdict.ok) {
      throw new ApiError(422, verdict.error);
    }
    const view = await this.api.move(this.view.id, split);
    return this.adopt(view, this.view.step + 1);
  }

  async undo(): Promise<SessionView> {
    if (!this.view) throw new Error('no session');
    const view = await this.api.undo(this.view.id);
    return this.adopt(view, this.view.step - 1);
  }

  async refresh(): Promise<SessionView> {
    if (!this.view) throw new Error('no session');
    const view = await this.api.get(this.view.id);
    return this.adopt(view, null);
  }
}
