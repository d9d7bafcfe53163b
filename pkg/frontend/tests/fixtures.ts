// Deterministic fixture CSVs matching the harness file contracts.

export function traceCsv(arms = 8, stages = 60): string {
  const lines = ["stage,arm,true_cvar,is_optimal"];
  for (let stage = 1; stage <= stages; stage++) {
    const values: number[] = [];
    for (let arm = 0; arm < arms; arm++) {
      // smooth, arm-dependent drift so panels differ and optima rotate
      const value = 2 + 0.3 * arm + 0.8 * Math.sin(stage / 7 + 1.3 * arm);
      values.push(Number(value.toFixed(6)));
    }
    let best = 0;
    for (let arm = 1; arm < arms; arm++) {
      if ((values[arm] as number) < (values[best] as number)) {
        best = arm;
      }
    }
    for (let arm = 0; arm < arms; arm++) {
      lines.push(`${stage},${arm},${values[arm]},${arm === best ? 1 : 0}`);
    }
  }
  return lines.join("\n") + "\n";
}

export function flatTraceCsv(arms = 2, stages = 20): string {
  const lines = ["stage,arm,true_cvar,is_optimal"];
  for (let stage = 1; stage <= stages; stage++) {
    for (let arm = 0; arm < arms; arm++) {
      lines.push(`${stage},${arm},${2 + arm},${arm === 0 ? 1 : 0}`);
    }
  }
  return lines.join("\n") + "\n";
}

export const SWEEP_METHODS = ["sample_average", "weighted_empirical", "dual_recursive"];
export const SWEEP_LAMBDAS = [0.01, 0.1, 0.5, 0.9, 0.99];

export function sweepCsv(methods: string[] = SWEEP_METHODS): string {
  const lines = ["method,lambda,hit_rate_T,avg_regret_T,empirical_cvar_T"];
  for (const method of methods) {
    for (const lambda of SWEEP_LAMBDAS) {
      let hit: number;
      let regret: number;
      let cvar: number;
      if (method === "sample_average") {
        // the sample-averaging estimator ignores the decay rate entirely
        hit = 0.62;
        regret = 0.35;
        cvar = 2.41;
      } else {
        const peak = method === "weighted_empirical" ? 0.86 : 0.84;
        const dip = Math.abs(lambda - 0.5);
        hit = Number((peak - 0.25 * dip).toFixed(6));
        regret = Number((0.12 + 0.3 * dip).toFixed(6));
        cvar = Number((2.1 + 0.4 * dip).toFixed(6));
      }
      lines.push(`${method},${lambda},${hit},${regret},${cvar}`);
    }
  }
  return lines.join("\n") + "\n";
}

export function aggregateCsv(method: string, stages = 100): string {
  const lines = ["stage,hit_rate,avg_regret,empirical_cvar"];
  const ceiling =
    method === "sample_average" ? 0.65 : method === "weighted_empirical" ? 0.88 : 0.85;
  for (let stage = 1; stage <= stages; stage++) {
    const ramp = 1 - Math.exp(-stage / 25);
    const hit = Number((0.125 + (ceiling - 0.125) * ramp).toFixed(6));
    const regret = Number((1.2 * (1 - 0.8 * ramp)).toFixed(6));
    const cvar = Number((3.0 - 0.7 * ramp).toFixed(6));
    lines.push(`${stage},${hit},${regret},${cvar}`);
  }
  return lines.join("\n") + "\n";
}
