"""
Experiment Engine
Runs the pattern, correlation, single-user, multi-user and multi-cell
studies and aggregates their Monte-Carlo results into a ResultTable
"""

import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.models.experiment import (
    ExperimentConfig,
    ExperimentStatus,
    PrecoderKind,
    ScenarioType,
    StrategyKind,
    StrategySpec,
    SweepParameter,
)
from app.models.optimization import SdbOptions
from app.models.propagation import Laplacian
from app.core.array import (
    first_sidelobe_db,
    itu_port_pattern_db,
    matched_itu_params,
    measure_hpbw_deg,
    port_hpbw_deg,
    port_pattern_element_db,
    port_peak_gain_dbi,
    wrap_azimuth_deg,
)
from app.core.beamforming import (
    PrecodingMatrix,
    equal_power,
    metrics,
    mrt_multiuser,
    rate_from_sinr,
    rzf,
    sir_deterministic,
    snr_single_user,
    tilt_com,
    tilt_cst,
    tilt_los,
    tilt_muab,
    weights_eigen_single_user,
    zf,
)
from app.core.channel import (
    ChannelApproach,
    ChannelSnapshot,
    LargeScale,
    UserGeometry,
    draw_large_scale,
    draw_rayleigh_correlated,
)
from app.core.correlation import (
    CovarianceMatrix,
    covariance_2d_restricted,
    element_covariance,
    port_covariance,
    scf_port_itu_estimate,
)
from app.core.errors import ConvergenceError, ExperimentCancelledError, InvalidParameterError, TrialError
from app.core.placement import multicell_layout, place_users, place_users_multicell
from app.core.results import ResultTable, mean_and_stderr
from app.core.rng import stream, sub_seed
from app.core.sdb import weights_sdb, weights_sdb_multicell
from app.core.txru import TiltWeights, VirtualizationMatrix, common_virtualization, weights_1d
from app.utils.logging import ExperimentLogger

logger = logging.getLogger(__name__)

# dB values are clipped here so result rows stay finite
DB_LIMIT = 300.0
PATTERN_FLOOR_DB = -100.0

DEFAULT_STRATEGIES: Dict[ScenarioType, List[StrategySpec]] = {
    ScenarioType.SINGLE_USER: [
        StrategySpec(kind=StrategyKind.CST, theta_deg=90.0),
        StrategySpec(kind=StrategyKind.CST, theta_deg=100.0),
        StrategySpec(kind=StrategyKind.LOS),
        StrategySpec(kind=StrategyKind.EIGEN),
    ],
    ScenarioType.MULTI_USER: [
        StrategySpec(kind=StrategyKind.CST, theta_deg=90.0),
        StrategySpec(kind=StrategyKind.CST, theta_deg=100.0),
        StrategySpec(kind=StrategyKind.COM),
        StrategySpec(kind=StrategyKind.SDB),
    ],
    ScenarioType.MULTI_CELL: [
        StrategySpec(kind=StrategyKind.CST, theta_deg=90.0),
        StrategySpec(kind=StrategyKind.CST, theta_deg=100.0),
        StrategySpec(kind=StrategyKind.COM),
        StrategySpec(kind=StrategyKind.SDB),
    ],
}

DropSamples = Dict[str, Dict[str, np.ndarray]]
# (sweep label, drop, strategy, first channel of the drop)
ChannelSink = Callable[[str, int, str, ChannelSnapshot], None]


def _db(x) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.clip(10.0 * np.log10(np.asarray(x, dtype=float)), -DB_LIMIT, DB_LIMIT)


def user_spectra(config: ExperimentConfig, user: UserGeometry):
    """Configured spectra re-centred on the user's LoS azimuth and elevation"""
    azimuth = config.azimuth
    if hasattr(azimuth, "mu_deg"):
        azimuth = azimuth.model_copy(update={"mu_deg": float(wrap_azimuth_deg(user.los_azimuth_deg))})
    elevation = config.elevation
    if isinstance(elevation, Laplacian):
        elevation = elevation.model_copy(update={"theta0_deg": user.los_elevation_deg})
    return azimuth, elevation


def user_covariance(
    config: ExperimentConfig, user: UserGeometry, rng: Optional[np.random.Generator] = None
) -> CovarianceMatrix:
    azimuth, elevation = user_spectra(config, user)
    return element_covariance(
        config.aaa,
        azimuth,
        elevation,
        config.corr.method,
        pattern_mode=config.corr.pattern_mode,
        n_samples=config.corr.n_samples,
        rng=rng,
    )


def tilt_for_strategy(spec: StrategySpec, users: Sequence[UserGeometry]) -> float:
    """Tilt angle of the angle-based strategies"""
    if spec.kind == StrategyKind.CST:
        return tilt_cst(spec.theta_deg)
    if spec.kind == StrategyKind.LOS:
        if len(users) != 1:
            raise InvalidParameterError("LoS tilting serves exactly one user")
        return tilt_los(users[0])
    if spec.kind == StrategyKind.COM:
        return tilt_com(users)
    if spec.kind == StrategyKind.MUAB:
        return tilt_muab(users, spec.weights)
    raise InvalidParameterError(f"strategy {spec.kind.value} does not select a tilt angle")


def strategy_weights(
    spec: StrategySpec,
    config: ExperimentConfig,
    users: Sequence[UserGeometry],
    covariances: Sequence[CovarianceMatrix],
    gains: Sequence[float],
    sdb_opts: SdbOptions,
) -> TiltWeights:
    """Common weight vector chosen by a single-cell strategy"""
    geometry = config.aaa
    if spec.kind == StrategyKind.EIGEN:
        if len(users) != 1:
            raise InvalidParameterError("the eigen solution serves exactly one user")
        return weights_eigen_single_user(covariances[0].block(1, 1, geometry.m_per_port))
    if spec.kind == StrategyKind.SDB:
        try:
            return weights_sdb(covariances, geometry, sdb_opts, gains=gains).weights
        except ConvergenceError as e:
            if e.best_weights is None:
                raise
            logger.warning(f"SDB stopped early, using the incumbent: {e}")
            return TiltWeights.normalized(e.best_weights)
    theta = tilt_for_strategy(spec, users)
    return weights_1d(geometry.m_per_port, geometry.d_v, theta)


def precode(H: np.ndarray, config: ExperimentConfig) -> PrecodingMatrix:
    k = H.shape[0]
    link = config.link
    powers = equal_power(link.tx_power_w, k)
    if link.precoder == PrecoderKind.ZF:
        return zf(H, powers)
    if link.precoder == PrecoderKind.RZF:
        delta = link.rzf_regularizer or k * link.noise_w / link.tx_power_w
        return rzf(H, powers, delta)
    return mrt_multiuser(H, powers)


def apply_sweep(config: ExperimentConfig, value: float) -> ExperimentConfig:
    """Copy of the config with the swept variable set to value"""
    sweep = config.general.sweep
    parameter = sweep.parameter
    if parameter == SweepParameter.N_USERS:
        return config.model_copy(update={"users": config.users.model_copy(update={"n_users": int(value)})})
    if parameter == SweepParameter.N_PORTS:
        return config.model_copy(update={"aaa": config.aaa.model_copy(update={"n_ports": int(value)})})
    if parameter == SweepParameter.TX_POWER_DBM:
        return config.model_copy(update={"link": config.link.model_copy(update={"tx_power_dbm": value})})
    if parameter == SweepParameter.DISTANCE_M:
        return config.model_copy(update={"users": config.users.model_copy(update={"distance_m": value})})
    if parameter == SweepParameter.ELEVATION_SPREAD_DEG:
        if not isinstance(config.elevation, Laplacian):
            raise InvalidParameterError("elevation spread sweeps need a Laplacian elevation spectrum")
        return config.model_copy(update={"elevation": config.elevation.model_copy(update={"spread_deg": value})})
    raise InvalidParameterError(f"unsupported sweep parameter {parameter}")


class ExperimentEngine:
    """
    Runs one experiment configuration

    Drops (user placement, covariances, weight optimization) are
    independent and may run on a thread pool; every drop draws from its own
    (seed, drop, purpose) stream and results are gathered in drop order, so
    the output does not depend on the thread count. All strategies of a drop
    see the same channel innovations.
    """

    def __init__(self, experiment_id: str, config: ExperimentConfig,
                 cancel_event: Optional[threading.Event] = None,
                 channel_sink: Optional[ChannelSink] = None):
        self.experiment_id = experiment_id
        self.config = config
        self.channel_sink = channel_sink
        self.status = ExperimentStatus.CREATED
        self.table = ResultTable()
        self.error: Optional[str] = None

        self._cancel = cancel_event or threading.Event()
        self._lock = threading.Lock()
        self._completed_drops = 0
        self._total_drops = max(1, self._count_drops())
        self.log = ExperimentLogger("core.experiment_engine", experiment_id)

    @property
    def scenario(self) -> ScenarioType:
        return self.config.general.scenario

    @property
    def strategies(self) -> List[StrategySpec]:
        return list(self.config.strategies) or DEFAULT_STRATEGIES.get(self.scenario, [])

    @property
    def progress(self) -> float:
        with self._lock:
            return min(1.0, self._completed_drops / self._total_drops)

    def cancel(self):
        self._cancel.set()

    def _count_drops(self) -> int:
        if self.scenario in (ScenarioType.PATTERN_COMPARE, ScenarioType.CORR_COMPARE):
            return 1
        general = self.config.general
        points = len(general.sweep.values) if general.sweep else 1
        return points * math.ceil(general.trials / general.channels_per_drop)

    def _sweep_points(self) -> List[Tuple[str, ExperimentConfig]]:
        sweep = self.config.general.sweep
        if sweep is None:
            return [("", self.config)]
        return [(f"{sweep.parameter.value}={v:g}", apply_sweep(self.config, v)) for v in sweep.values]

    def run(self) -> ResultTable:
        """Execute the scenario; raises TrialError with the failing drop for replay"""
        runners: Dict[ScenarioType, Callable[[str, ExperimentConfig], None]] = {
            ScenarioType.PATTERN_COMPARE: self._run_pattern,
            ScenarioType.CORR_COMPARE: self._run_corr,
            ScenarioType.SINGLE_USER: self._run_monte_carlo,
            ScenarioType.MULTI_USER: self._run_monte_carlo,
            ScenarioType.MULTI_CELL: self._run_monte_carlo,
        }
        self.status = ExperimentStatus.RUNNING
        self.log.log_experiment_event("Experiment started", {
            "scenario": self.scenario.value,
            "trials": self.config.general.trials,
            "seed": self.config.general.seed,
        })
        start = time.perf_counter()
        try:
            for label, point in self._sweep_points():
                runners[self.scenario](label, point)
        except ExperimentCancelledError:
            self.status = ExperimentStatus.CANCELLED
            self.log.log_experiment_event("Experiment cancelled")
            raise
        except Exception as e:
            self.status = ExperimentStatus.ERROR
            self.error = str(e)
            self.log.log_error(e, "run")
            raise

        self.status = ExperimentStatus.COMPLETED
        self.log.log_performance_metric("runtime", time.perf_counter() - start, "s")
        self.log.log_experiment_event("Experiment completed", {"rows": len(self.table)})
        return self.table

    def _add(self, strategy: str, sweep: str, metric: str, value: float,
             stderr: float = 0.0, trials: int = 1):
        self.table.add(self.scenario.value, strategy, sweep, metric, value, stderr, trials,
                       self.config.general.seed)

    def _mark_drop_done(self):
        with self._lock:
            self._completed_drops += 1
            done = self._completed_drops
        self.log.log_trial_progress(done, self._total_drops)

    def _run_pattern(self, label: str, config: ExperimentConfig):
        geometry, section = config.aaa, config.pattern
        tilt = config.general.theta_tilt_deg
        m = geometry.m_per_port
        theta = np.linspace(section.theta_min_deg, section.theta_max_deg, section.theta_points)

        w = weights_1d(m, geometry.d_v, tilt)
        element = np.maximum(port_pattern_element_db(geometry, w.weights, section.phi_deg, theta), PATTERN_FLOOR_DB)
        itu_params = matched_itu_params(m, geometry.d_v, geometry.element_params) if section.matched_itu else config.itu
        itu = np.asarray(itu_port_pattern_db(itu_params, section.phi_deg, theta, tilt))

        for name, values in (("element", element), ("itu", itu)):
            sidelobe = first_sidelobe_db(theta, values)
            self._add(name, label, "hpbw_deg", measure_hpbw_deg(theta, values))
            self._add(name, label, "peak_gain_dbi", float(np.max(values)))
            self._add(name, label, "sidelobe_present", float(np.isfinite(sidelobe)))
            if np.isfinite(sidelobe):
                self._add(name, label, "first_sidelobe_db", sidelobe)
            for t, v in zip(theta, values):
                self._add(name, f"theta={t:.4g}", "gain_dbi", float(v))

        self._add("analytic", label, "hpbw_deg", port_hpbw_deg(m, geometry.d_v))
        self._add("analytic", label, "peak_gain_dbi",
                  port_peak_gain_dbi(geometry.element_params.gain_max_dbi, m))
        self._mark_drop_done()

    def _run_corr(self, label: str, config: ExperimentConfig):
        geometry, corr = config.aaa, config.corr
        tilt = config.general.theta_tilt_deg
        seed = config.general.seed
        method = corr.method
        rng = stream(seed, 0, f"corr:{label}") if method == "mc" else None
        trials = corr.n_samples if method == "mc" else 1

        vm = common_virtualization(geometry, weights_1d(geometry.m_per_port, geometry.d_v, tilt))
        itu_sets = {
            "itu": config.itu,
            "itu-matched": matched_itu_params(geometry.m_per_port, geometry.d_v, geometry.element_params),
        }
        theta0 = config.elevation.theta0_deg if isinstance(config.elevation, Laplacian) else 90.0
        suffix = f"{label}," if label else ""

        for spread in corr.elevation_spreads_deg:
            if self._cancel.is_set():
                raise ExperimentCancelledError()
            sweep = f"{suffix}sigma={spread:g}"
            elevation = Laplacian(theta0_deg=theta0, spread_deg=spread)

            r_e = element_covariance(geometry, config.azimuth, elevation, method,
                                     pattern_mode=corr.pattern_mode, n_samples=corr.n_samples, rng=rng)
            r_bs = port_covariance(r_e, vm).matrix
            self._add("element", sweep, "power", float(np.real(r_bs[0, 0])), trials=trials)
            for lag in range(1, geometry.n_ports):
                self._add("element", sweep, f"abs_rho_lag{lag}", float(np.abs(r_bs[0, lag])), trials=trials)
            if geometry.m_per_port > 1:
                self._add("element", sweep, "abs_rho_vertical_lag1", float(np.abs(r_e.matrix[0, 1])), trials=trials)

            for name, params in itu_sets.items():
                for lag in range(geometry.n_ports):
                    estimate = scf_port_itu_estimate(
                        params, config.azimuth, elevation, tilt, 1 + lag, 1, method,
                        d_h=geometry.d_h, n_samples=corr.n_samples, rng=rng,
                    )
                    if lag == 0:
                        self._add(name, sweep, "power", estimate.value.real, estimate.stderr, trials)
                    else:
                        self._add(name, sweep, f"abs_rho_lag{lag}", abs(estimate.value), estimate.stderr, trials)

        if corr.compare_2d:
            for lag in range(geometry.n_ports):
                value = covariance_2d_restricted(geometry, config.azimuth, 1 + lag, 1, itu_params=config.itu)
                metric = "power" if lag == 0 else f"abs_rho_lag{lag}"
                self._add("2d", label, metric, value.real if lag == 0 else abs(value))
        self._mark_drop_done()

    def _run_monte_carlo(self, label: str, config: ExperimentConfig):
        general = config.general
        per_drop = general.channels_per_drop
        n_drops = math.ceil(general.trials / per_drop)
        drop_fn = {
            ScenarioType.SINGLE_USER: self._single_user_drop,
            ScenarioType.MULTI_USER: self._multi_user_drop,
            ScenarioType.MULTI_CELL: self._multi_cell_drop,
        }[self.scenario]

        def guarded(drop: int) -> DropSamples:
            if self._cancel.is_set():
                raise ExperimentCancelledError()
            n_channels = min(per_drop, general.trials - drop * per_drop)
            try:
                samples = drop_fn(config, label, drop, n_channels)
            except ExperimentCancelledError:
                raise
            except Exception as e:
                raise TrialError(drop * per_drop, general.seed, e) from e
            self._mark_drop_done()
            return samples

        if general.threads > 1:
            with ThreadPoolExecutor(max_workers=general.threads) as pool:
                drops = list(pool.map(guarded, range(n_drops)))
        else:
            drops = [guarded(d) for d in range(n_drops)]

        for spec in self.strategies:
            merged: Dict[str, List[np.ndarray]] = {}
            for samples in drops:
                for metric, values in samples[spec.name].items():
                    merged.setdefault(metric, []).append(values)
            for metric, chunks in merged.items():
                values = np.concatenate(chunks)
                mean, stderr = mean_and_stderr(values)
                self._add(spec.name, label, metric, mean, stderr, values.size)

    def _emit_channel(self, label: str, drop: int, strategy: str, channel: np.ndarray):
        if self.channel_sink is not None:
            self.channel_sink(label, drop, strategy, ChannelSnapshot(channel, 0.0, ChannelApproach.ELEMENT))

    def _sdb_opts(self, config: ExperimentConfig, drop: int, label: str) -> SdbOptions:
        return config.sdb.model_copy(update={"seed": sub_seed(config.general.seed, drop, f"sdb:{label}")})

    def _single_user_drop(self, config: ExperimentConfig, label: str, drop: int, n_channels: int) -> DropSamples:
        seed = config.general.seed
        rng = stream(seed, drop, f"drop:{label}")
        user = place_users(config.users, rng, 1)[0]
        large_scale = draw_large_scale(config.large_scale, user.distance_m, rng)
        r_e = user_covariance(config, user, rng)
        sdb_opts = self._sdb_opts(config, drop, label)
        p_tx, noise = config.link.tx_power_w, config.link.noise_w

        samples: DropSamples = {}
        for spec in self.strategies:
            w = strategy_weights(spec, config, [user], [r_e], [large_scale.power_gain], sdb_opts)
            r_bs = port_covariance(r_e, common_virtualization(config.aaa, w))
            channel_rng = stream(seed, drop, f"channel:{label}")
            channels = [draw_rayleigh_correlated(r_bs, large_scale, channel_rng) for _ in range(n_channels)]
            self._emit_channel(label, drop, spec.name, channels[0].conj()[None, :])
            snr = np.array([snr_single_user(h, p_tx, noise) for h in channels])
            samples[spec.name] = {"rate": rate_from_sinr(snr), "snr_db": _db(snr)}
        return samples

    def _multi_user_drop(self, config: ExperimentConfig, label: str, drop: int, n_channels: int) -> DropSamples:
        seed = config.general.seed
        rng = stream(seed, drop, f"drop:{label}")
        users = place_users(config.users, rng)
        large_scales = [draw_large_scale(config.large_scale, u.distance_m, rng) for u in users]
        gains = [ls.power_gain for ls in large_scales]
        covariances = [user_covariance(config, u, rng) for u in users]
        sdb_opts = self._sdb_opts(config, drop, label)
        noise = config.link.noise_w

        samples: DropSamples = {}
        for spec in self.strategies:
            w = strategy_weights(spec, config, users, covariances, gains, sdb_opts)
            vm = common_virtualization(config.aaa, w)
            r_bs = [port_covariance(r, vm) for r in covariances]
            surrogate = (
                float(np.min(sir_deterministic([r.scaled(g) for r, g in zip(r_bs, gains)])))
                if len(users) > 1 else np.inf
            )

            channel_rng = stream(seed, drop, f"channel:{label}")
            min_rate, sum_rate, min_sir = [], [], []
            for _ in range(n_channels):
                H = np.stack([draw_rayleigh_correlated(r, ls, channel_rng).conj() for r, ls in zip(r_bs, large_scales)])
                if not min_rate:
                    self._emit_channel(label, drop, spec.name, H)
                link = metrics(H, precode(H, config), noise_vars=noise)
                rates = link.rate
                min_rate.append(rates.min())
                sum_rate.append(rates.sum())
                min_sir.append(link.sir.min())
            samples[spec.name] = {
                "min_rate": np.array(min_rate),
                "sum_rate": np.array(sum_rate),
                "min_sir_db": _db(min_sir),
                "min_sir_surrogate_db": np.full(n_channels, _db(surrogate)),
            }
        return samples

    def _multi_cell_weights(
        self,
        spec: StrategySpec,
        config: ExperimentConfig,
        own_users: List[List[UserGeometry]],
        r_e: List[List[List[CovarianceMatrix]]],
        gains: np.ndarray,
        sdb_opts: SdbOptions,
    ) -> List[TiltWeights]:
        geometry = config.aaa
        cells = len(own_users)
        if spec.kind in (StrategyKind.CST, StrategyKind.COM, StrategyKind.MUAB):
            return [weights_1d(geometry.m_per_port, geometry.d_v, tilt_for_strategy(spec, own_users[i]))
                    for i in range(cells)]
        if spec.kind != StrategyKind.SDB:
            raise InvalidParameterError(f"strategy {spec.kind.value} is not available with several cells")

        intra = [r_e[i][i] for i in range(cells)]
        cross = [[r for j in range(cells) if j != i for r in r_e[i][j]] for i in range(cells)]
        intra_gains = [gains[i, i] for i in range(cells)]
        cross_gains = [np.concatenate([gains[i, j] for j in range(cells) if j != i]) for i in range(cells)]

        caps = []
        for i in range(cells):
            vm_com = common_virtualization(
                geometry, weights_1d(geometry.m_per_port, geometry.d_v, tilt_com(own_users[i]))
            )
            leakage = np.array([port_covariance(r, vm_com).trace for r in cross[i]]) * cross_gains[i]
            caps.append(config.multicell.leakage_cap_ratio * leakage)

        results = weights_sdb_multicell(
            intra, cross, geometry, caps, sdb_opts, intra_gains=intra_gains, cross_gains=cross_gains
        )
        return [r.weights for r in results]

    def _multi_cell_drop(self, config: ExperimentConfig, label: str, drop: int, n_channels: int) -> DropSamples:
        seed = config.general.seed
        rng = stream(seed, drop, f"drop:{label}")
        layout = multicell_layout(config.multicell.n_cells, config.users.cell_radius_m)
        placed = place_users_multicell(config.users, layout, rng)
        cells, k = layout.n_cells, config.users.n_users

        large_scales: List[List[List[LargeScale]]] = [
            [[draw_large_scale(config.large_scale, u.distance_m, rng) for u in placed.links[i][j]]
             for j in range(cells)]
            for i in range(cells)
        ]
        gains = np.array([[[ls.power_gain for ls in row] for row in site] for site in large_scales])
        r_e = [[[user_covariance(config, u, rng) for u in placed.links[i][j]] for j in range(cells)]
               for i in range(cells)]
        own_users = [placed.own(i) for i in range(cells)]
        sdb_opts = self._sdb_opts(config, drop, label)
        power = config.link.tx_power_w / k

        samples: DropSamples = {}
        for spec in self.strategies:
            weights = self._multi_cell_weights(spec, config, own_users, r_e, gains, sdb_opts)
            vms: List[VirtualizationMatrix] = [common_virtualization(config.aaa, w) for w in weights]
            r_bs = [[[port_covariance(r, vms[i]) for r in r_e[i][j]] for j in range(cells)] for i in range(cells)]

            channel_rng = stream(seed, drop, f"channel:{label}")
            min_sir = []
            for _ in range(n_channels):
                h = np.array([
                    [[draw_rayleigh_correlated(r_bs[i][j][u], large_scales[i][j][u], channel_rng)
                      for u in range(k)] for j in range(cells)]
                    for i in range(cells)
                ])
                # h[i, j, u]: channel from BS i to user u of cell j
                if not min_sir:
                    own = np.concatenate([h[i, i].conj() for i in range(cells)])
                    self._emit_channel(label, drop, spec.name, own)
                directions = [precode(h[i, i].conj(), config).directions for i in range(cells)]
                received = np.stack([
                    np.abs(np.einsum("jun,nl->jul", h[i].conj(), directions[i])) ** 2 * power
                    for i in range(cells)
                ])
                total = received.sum(axis=(0, 3))
                signal = np.array([[received[j, j, u, u] for u in range(k)] for j in range(cells)])
                with np.errstate(divide="ignore"):
                    sir = signal / (total - signal)
                min_sir.append(sir.min())
            min_sir = np.array(min_sir)
            samples[spec.name] = {"min_sir_db": _db(min_sir), "min_rate": rate_from_sinr(min_sir)}
        return samples


def run_experiment(config: ExperimentConfig, experiment_id: str = "cli",
                   channel_sink: Optional[ChannelSink] = None) -> ResultTable:
    """Run a configuration to completion and return its result table"""
    return ExperimentEngine(experiment_id, config, channel_sink=channel_sink).run()
