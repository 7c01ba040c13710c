/** Trial presets offered by the create form. */

import type { TrialConfigPayload } from "./types.js";

export function twoArmDefault(id: string, pNull = 0.5, seed = 1): TrialConfigPayload {
  return {
    id,
    arms: ["Control", "Treatment"],
    policy: { method: "point_null_binomial", p_null: pNull },
    prior: { a0: 1, b0: 1, a: [1, 1], b: [1, 1] },
    seed,
  };
}

export function fourArmPreset(id: string, pNull = 0.5, seed = 1): TrialConfigPayload {
  return {
    id,
    arms: ["Control", "Treatment 1", "Treatment 2", "Treatment 3"],
    policy: { method: "point_null_binomial", p_null: pNull },
    prior: { a0: 1, b0: 1, a: [1, 1, 1, 1], b: [1, 1, 1, 1] },
    seed,
  };
}

/** The historical 12-patient sequence: (arm, outcome) with arm 1 = treatment,
 * outcome 1 = survival. Patient 1 received the treatment and survived,
 * patient 2 received control and died, patients 3-12 all received the
 * treatment and survived. */
export const ECMO_SEQUENCE: ReadonlyArray<readonly [number, number]> = [
  [1, 1],
  [0, 0],
  ...Array.from({ length: 10 }, () => [1, 1] as const),
];

export function ecmoPreset(id: string, pNull = 0.5, seed = 9): TrialConfigPayload {
  return {
    id,
    arms: ["Control", "ECMO"],
    policy: { method: "point_null_binomial", p_null: pNull },
    seed,
  };
}
