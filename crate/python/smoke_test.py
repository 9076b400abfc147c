"""Quick check of the hardcnf extension module.

Build and install first:
    cd crates/python && maturin build --release -o dist && pip install dist/*.whl
"""

import hardcnf


def main() -> None:
    f = hardcnf.generate(12, 40, seed=7)
    assert f.num_variables == 12 and len(f) == 40
    assert all(len(c) == 3 for c in f.clauses)

    again = hardcnf.CnfFormula.from_dimacs(f.to_dimacs())
    assert again == f

    for heuristic in ("static", "jw", "random"):
        stats = hardcnf.solve(f, heuristic=heuristic, seed=3)
        assert stats.status == hardcnf.brute_force_sat(f), heuristic
        if stats.status == "SAT":
            assert f.is_satisfied_by(stats.model)

    unsat = hardcnf.CnfFormula(1, [[1], [-1]])
    assert hardcnf.solve(unsat).status == "UNSAT"
    assert hardcnf.solve(hardcnf.generate(50, 300, seed=1), decision_limit=1).status in (
        "UNSAT",
        "LIMIT_EXCEEDED",
    )

    run = hardcnf.evolve_single_stage(
        num_variables=20, num_clauses=60, generations=300, seed=5, record_every=10
    )
    assert run.generations == 300
    assert [r["generation"] for r in run.trace] == list(range(0, 300, 10))
    assert set(run.trace[0]) == set(hardcnf.TRACE_HEADER.split(","))
    scores = [r["score"] for r in run.trace]
    assert scores == sorted(scores)
    assert run.final_stats.propagations >= run.initial_stats.propagations

    two = hardcnf.evolve_two_stage_unsat(
        num_variables=15, stage1_factor=1, generations=100, seed=2, record_every=1
    )
    assert two.final_stats.status == "UNSAT"
    assert two.final_formula.num_clauses <= two.initial.num_clauses

    print("python smoke test passed:", run.final_stats, two.final_stats)


if __name__ == "__main__":
    main()
