// Wire types mirroring the session API. The console never computes an
// allocation itself; everything here is a readout of GET /sessions/{id}.

export type DesignDescriptor = {
  kind: string;
  target?: string;
  gamma?: number;
  burn_in?: number;
  alpha?: number;
  y0?: number[];
  z0?: number[];
  mcad?: { alpha_s: number; alpha_f: number; beta_s: number; beta_f: number };
  estimator?: { a: number; b: number };
};

export type HistoryEntry = {
  subject: number;
  arm: number;
  outcome: boolean | null;
};

export type BurnIn = {
  active: boolean;
  completed: number;
  total: number;
};

export type SessionView = {
  id: string;
  name: string;
  design: DesignDescriptor;
  arms: number;
  seed: number;
  n: number;
  counts: {
    N: number[];
    N_observed: number[];
    S_observed: number[];
  };
  p_hat: number[];
  rho_hat: number[] | null;
  pending: number[];
  burn_in: BurnIn | null;
  history: HistoryEntry[];
};

export type SessionSummary = {
  id: string;
  name: string;
  design: string;
  n: number;
};

export type Enrollment = {
  subject_index: number;
  assignment: number;
};
