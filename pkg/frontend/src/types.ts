// Shared shapes of the session API.

export interface NfaEdge {
  src: string;
  action: string;
  dst: string;
}

export interface NfaDescription {
  states: string[];
  alphabet: string[];
  initial: string;
  target: string;
  edges: NfaEdge[];
}

export type SessionStatus = 'Running' | 'Won' | 'Inconclusive';

export interface SessionView {
  id: string;
  m: number;
  counts: Record<string, number>;
  proposedAction: string | null;
  legalSuccessors: Record<string, string[]>;
  status: SessionStatus;
  step: number;
  nfa?: NfaDescription;
}

/** Adversary allocation: source state -> successor -> agent count. */
export type Split = Record<string, Record<string, number>>;
