"""Train a finite rectifier committee with Metropolis dynamics and watch the
initial bias select the quasistationary state.

A student started toward alignment settles into the well-generalizing
specialized state; one started against its teacher lags behind it over the
same budget.  The pooled student-teacher overlap histogram tells the two
apart at a glance.

Run with:  python3 demos/train_finite_network.py   (about half a minute)
"""

from scmlab.mc_sim import McConfig, run


def campaign(bias):
    cfg = McConfig(N=30, K=4, M=4, activation="relu", beta=1.0,
                   alpha_tilde=24.0, mcs_total=4000, measure_window=500,
                   runs=3, seed=7, init_bias=bias)
    return run(cfg).summary()


def sparkline(mass):
    blocks = " .:-=+*#%@"
    top = max(mass) or 1.0
    return "".join(blocks[min(int(9 * m / top + 0.5), 9)] for m in mass)


def main():
    print("Rectifier committee, N=30, K=M=4, load alpha~ = 24, beta = 1")
    print("=" * 62)
    results = {}
    for bias in ("PositiveSpecialized", "AntiSpecialized"):
        s = campaign(bias)
        results[bias] = s
        print(f"{bias}:")
        print(f"  windowed eps_g = {s['eps_g_mean']:.5f} +- {s['eps_g_se']:.5f}")
        print(f"  windowed E/P   = {s['energy_per_p_mean']:.5f}  "
              f"(training error below generalization error)")
        print(f"  overlap mass at R < 0: {s['negative_overlap_mass']:.2f}")
        print(f"  histogram over [-1, 1]: |{sparkline(s['histogram_mass'])}|")
        print()

    spec, anti = results["PositiveSpecialized"], results["AntiSpecialized"]
    print(f"Aligned start generalizes better by "
          f"{anti['eps_g_mean'] - spec['eps_g_mean']:.5f} "
          f"(combined se {(spec['eps_g_se']**2 + anti['eps_g_se']**2) ** 0.5:.5f}).")
    print("The aligned start grows a sharp diagonal-overlap spike near +1 with")
    print("an off-diagonal cloud around zero; the anti start never develops")
    print("that spike, keeping a negative shoulder and a broad mixed cluster.")


if __name__ == "__main__":
    main()
