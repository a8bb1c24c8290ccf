"""FastAPI service wrapping the core library.

Every endpoint is a pure function of its request body (plus the seed where
randomness is involved), so responses are reproducible.  Run with:

    uvicorn divkit.service:app
"""

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from .. import generators, portfolio, scoring, sufficiency, thermo
from ..simplex import ProbVec, kl_divergence
from . import schemas


def _market(model: schemas.MarketModel) -> portfolio.Market:
    return portfolio.Market(model.relatives, ProbVec(model.probs))


def create_app() -> FastAPI:
    app = FastAPI(
        title="divkit",
        description="Bregman divergences, scoring rules, sufficiency checks, "
        "log-optimal portfolios, and extractable energy.",
        version="0.1.0",
    )

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/divergence", response_model=schemas.DivergenceResponse)
    def divergence(req: schemas.DivergenceRequest):
        return schemas.DivergenceResponse(
            kl_nats=kl_divergence(ProbVec(req.p), ProbVec(req.q))
        )

    @app.post("/bregman", response_model=schemas.BregmanResponse)
    def bregman(req: schemas.BregmanRequest):
        gen = generators.generator_by_name(req.generator)
        value = generators.bregman_divergence(gen, ProbVec(req.p), ProbVec(req.q))
        return schemas.BregmanResponse(generator=gen.name, divergence_nats=value)

    @app.post("/score", response_model=schemas.ScoreResponse)
    def score(req: schemas.ScoreRequest):
        p, q = ProbVec(req.P), ProbVec(req.Q)
        if p.dim != q.dim:
            raise ValueError(f"P and Q have different dimensions ({p.dim} vs {q.dim})")
        gen = generators.generator_by_name(req.generator) if req.generator else None
        rule = scoring.rule_by_name(req.rule, p.dim, generator=gen)
        step = req.grid_step if req.grid_step is not None else (0.01 if p.dim <= 3 else 0.05)
        witness = scoring.properness_witness(rule, p.dim, step)
        return schemas.ScoreResponse(
            rule=rule.name,
            score=scoring.expected_score(rule, p, q),
            divergence=scoring.divergence_from_rule(rule, p, q),
            proper=witness is None,
            grid_step=step,
        )

    @app.post("/suffcheck", response_model=schemas.SuffcheckResponse, response_model_exclude_none=True)
    def suffcheck(req: schemas.SuffcheckRequest):
        name, div = sufficiency.divergence_by_name(req.divergence)
        report = sufficiency.classify_divergence(div, req.dims, req.trials, req.seed, name=name)
        payload = report.to_dict(include_entries=req.include_entries)
        return schemas.SuffcheckResponse(**payload)

    @app.post("/portfolio/solve", response_model=schemas.SolveResponse)
    def portfolio_solve(req: schemas.SolveRequest):
        mkt = _market(req.market)
        result = portfolio.solve_log_optimal(mkt, tol=req.tol)
        if not result.converged:
            raise HTTPException(
                status_code=500,
                detail=f"solver stalled at residual {result.residual:.3e}",
            )
        return schemas.SolveResponse(
            b=result.b.w.tolist(),
            W_nats=portfolio.doubling_rate(result.b, mkt),
            kkt_residual=result.residual,
            iterations=result.iterations,
            converged=result.converged,
        )

    @app.post("/portfolio/regret", response_model=schemas.RegretResponse)
    def portfolio_regret(req: schemas.RegretRequest):
        mkt = _market(req.market)
        try:
            rb = portfolio.regret_and_bound(mkt, ProbVec(req.Q), tol=req.tol)
        except portfolio.NonConvergenceError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        return schemas.RegretResponse(
            regret_nats=rb.regret,
            bound_nats=rb.bound,
            gap_nats=rb.gap,
            horse_race=portfolio.is_horse_race(mkt),
        )

    @app.post("/portfolio/simulate", response_model=schemas.SimulateResponse, response_model_exclude_none=True)
    def portfolio_simulate(req: schemas.SimulateRequest):
        mkt = _market(req.market)
        b = ProbVec(req.b)
        path, terminal = portfolio.simulate_wealth(mkt, b, req.n, req.seed)
        return schemas.SimulateResponse(
            n=req.n,
            seed=req.seed,
            terminal_rate_nats=terminal,
            final_log_wealth_nats=float(path[-1]),
            expected_rate_nats=portfolio.doubling_rate(b, mkt),
            log_wealth_path=[float(v) for v in path] if req.include_path else None,
        )

    @app.post("/thermo", response_model=schemas.ThermoResponse, response_model_exclude_none=True)
    def thermo_endpoint(req: schemas.ThermoRequest):
        levels = thermo.EnergyLevels(req.levels)
        bath = thermo.HeatBath(req.T_kelvin)
        gibbs = thermo.gibbs_state(levels, bath)
        resp = schemas.ThermoResponse(T_kelvin=req.T_kelvin, gibbs=gibbs.w.tolist())
        if req.state is not None:
            state = ProbVec(req.state)
            resp.Ex_joules = thermo.extractable_energy(state, gibbs, bath)
            resp.identity_gap_joules = thermo.free_energy_identity_gap(state, levels, bath)
        return resp

    return app


app = create_app()
