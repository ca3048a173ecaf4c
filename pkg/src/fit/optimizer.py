"""
Direct recovery of per-frame depth and adjacent-pair poses by minimising
the total loss.

The variables are log2-depth rasters and param6 pose vectors. Each sweep
takes one step on the depth block and then one on the pose block. Every
step goes through a backtracking line search on the total loss, so an
accepted step always lowers it. The depth block moves each pixel by its
own adaptive step against the sign of its gradient; the pose block uses
dense BFGS.

Semantic masks, the auto-mask gate and the per-pixel source selections are
frozen between refreshes, so within a refresh period every step works on
one fixed objective. The 3D point term joins after a photometric warm-up.
"""

import math
from typing import Callable, Dict, List, Literal, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import torch

from src.geometry.se3 import chain_adjacent, compose, exp6
from src.losses.total import total_loss
from src.models.camera import DTYPE, Intrinsics, PoseSE3
from src.models.fit import FitConfig, FitState
from src.models.losses import FrozenSelection, LossReport
from src.models.snippet import SnippetInputs
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

# Central-difference steps: log2-depth units and param6 units.
FD_STEP_DEPTH = 1e-4
FD_STEP_POSE = 1e-6

# Line search
SUFFICIENT_DECREASE = 1e-4
BACKTRACK = 0.5

# Depth step adaptation (log2-depth units)
STEP_GROWTH = 1.2
STEP_SHRINK = 0.5
MAX_DEPTH_STEP = 1.0

# Longest pose step tried (param6 norm)
MAX_POSE_STEP = 0.1


class Evaluation(NamedTuple):
    objective: torch.Tensor
    reports: Dict[int, LossReport]


class Gradient(NamedTuple):
    log_depth: torch.Tensor
    pose_params: torch.Tensor


class FitResult(NamedTuple):
    state: FitState
    report: LossReport
    reports: Dict[int, LossReport]


def target_indices(n_frames: int, mode: str) -> List[int]:
    return [n_frames // 2] if mode == "reference" else list(range(n_frames))


def source_indices(target: int, n_frames: int) -> List[int]:
    return [s for s in (target - 1, target + 1) if 0 <= s < n_frames]


def snippet_for_target(
    target: int,
    images: Sequence[torch.Tensor],
    labels: Sequence[torch.Tensor],
    K: Intrinsics,
    depths: torch.Tensor,
    adjacent: Sequence[PoseSE3],
) -> SnippetInputs:
    """Target frame with its adjacent frames as sources."""
    sources = source_indices(target, len(images))
    return SnippetInputs(
        K=K,
        target_image=images[target],
        target_labels=labels[target],
        target_depth=depths[target],
        source_images=[images[s] for s in sources],
        source_labels=[labels[s] for s in sources],
        source_depths=[depths[s] for s in sources],
        poses=[chain_adjacent(list(adjacent), target, s) for s in sources],
    )


def evaluate(
    log_depth: torch.Tensor,
    pose_params: torch.Tensor,
    images: Sequence[torch.Tensor],
    labels: Sequence[torch.Tensor],
    K: Intrinsics,
    config: FitConfig,
    frozen: Optional[Dict[int, FrozenSelection]] = None,
) -> Evaluation:
    """Mean objective over the target frames and each target's report."""
    depths = torch.exp2(log_depth)
    adjacent = [exp6(p) for p in pose_params]
    reports = {}
    for target in target_indices(len(images), config.target_frames):
        inputs = snippet_for_target(target, images, labels, K, depths, adjacent)
        selection = frozen.get(target) if frozen is not None else None
        reports[target] = total_loss(inputs, config.weights, config.terms, selection)
    objective = torch.stack([r.objective for r in reports.values()]).mean()
    return Evaluation(objective=objective, reports=reports)


def finite_difference(
    fn: Callable[[torch.Tensor], float],
    x: torch.Tensor,
    step: float,
    indices: Optional[Sequence[int]] = None,
) -> torch.Tensor:
    """Central differences of a scalar function; entries outside `indices` stay 0."""
    base = x.detach().clone()
    grad = torch.zeros_like(base)
    flat_base = base.reshape(-1)
    flat_grad = grad.reshape(-1)
    for i in (range(flat_base.numel()) if indices is None else indices):
        shifted = flat_base.clone()
        shifted[i] = flat_base[i] + step
        upper = fn(shifted.reshape(base.shape))
        shifted[i] = flat_base[i] - step
        lower = fn(shifted.reshape(base.shape))
        flat_grad[i] = (upper - lower) / (2.0 * step)
    return grad


def gradient(
    log_depth: torch.Tensor,
    pose_params: torch.Tensor,
    images: Sequence[torch.Tensor],
    labels: Sequence[torch.Tensor],
    K: Intrinsics,
    config: FitConfig,
    frozen: Dict[int, FrozenSelection],
    mode: Optional[str] = None,
    depth_indices: Optional[Sequence[int]] = None,
) -> Gradient:
    """
    Gradient of the frozen-mask objective w.r.t. log2-depth and param6.

    Args:
        frozen: Selections per target frame (from an unfrozen evaluation)
        mode: "analytic" or "finite-difference" (defaults to config.gradient_mode)
        depth_indices: Flat log-depth entries to difference (all when None);
            analytic mode ignores it
    """
    mode = mode or config.gradient_mode
    if mode == "analytic":
        depth_var = log_depth.detach().clone().requires_grad_(True)
        pose_var = pose_params.detach().clone().requires_grad_(True)
        objective = evaluate(depth_var, pose_var, images, labels, K, config, frozen).objective
        depth_grad, pose_grad = torch.autograd.grad(objective, [depth_var, pose_var], allow_unused=True)
        return Gradient(
            log_depth=depth_grad if depth_grad is not None else torch.zeros_like(depth_var),
            pose_params=pose_grad if pose_grad is not None else torch.zeros_like(pose_var),
        )

    depth_fixed = log_depth.detach()
    pose_fixed = pose_params.detach()

    def of_depth(x: torch.Tensor) -> float:
        with torch.no_grad():
            return float(evaluate(x, pose_fixed, images, labels, K, config, frozen).objective)

    def of_pose(x: torch.Tensor) -> float:
        with torch.no_grad():
            return float(evaluate(depth_fixed, x, images, labels, K, config, frozen).objective)

    return Gradient(
        log_depth=finite_difference(of_depth, depth_fixed, FD_STEP_DEPTH, depth_indices),
        pose_params=finite_difference(of_pose, pose_fixed, FD_STEP_POSE),
    )


def freeze(reports: Dict[int, LossReport]) -> Dict[int, FrozenSelection]:
    return {target: report.selection for target, report in reports.items()}


def initial_state(
    n_frames: int,
    height: int,
    width: int,
    init_depth: Union[float, Sequence[torch.Tensor], torch.Tensor] = 10.0,
    init_poses: Optional[Sequence[PoseSE3]] = None,
) -> FitState:
    """Constant (or given) depth and zero (or given) adjacent poses."""
    if isinstance(init_depth, (int, float)):
        if init_depth <= 0:
            raise ValueError(f"initial depth must be positive, got {init_depth}")
        log_depth = torch.full((n_frames, height, width), math.log2(init_depth), dtype=DTYPE)
    else:
        depth = torch.stack([torch.as_tensor(d, dtype=DTYPE) for d in init_depth])
        if tuple(depth.shape) != (n_frames, height, width):
            raise ValueError(f"initial depths {tuple(depth.shape)} do not match {(n_frames, height, width)}")
        log_depth = torch.log2(depth)

    if init_poses is None:
        pose_params = torch.zeros((n_frames - 1, 6), dtype=DTYPE)
    else:
        if len(init_poses) != n_frames - 1:
            raise ValueError(f"need {n_frames - 1} adjacent poses, got {len(init_poses)}")
        pose_params = torch.stack([p.param6.detach() for p in init_poses])
    return FitState(log_depth=log_depth, pose_params=pose_params)


def perturbed_pose(pose: PoseSE3, angle: float, distance: float, seed: int = 0) -> PoseSE3:
    """Pose composed with a rotation of `angle` rad about a random axis and a random shift of `distance`."""
    rng = np.random.default_rng(seed)
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    shift = rng.normal(size=3)
    shift *= distance / np.linalg.norm(shift)
    return compose(exp6(np.concatenate([axis * angle, shift])), pose.detached())


# ============================================================================
# Line search and block steps
# ============================================================================

class LineSearch(NamedTuple):
    accepted: bool
    scale: float
    value: float


def backtracking_line_search(
    fn: Callable[[torch.Tensor], float],
    x: torch.Tensor,
    direction: torch.Tensor,
    value: float,
    slope: float,
    max_backtracks: int,
) -> LineSearch:
    """
    First t in 1, 1/2, 1/4, ... with fn(x + t d) <= value + c t slope and a strict decrease.

    Args:
        fn: Objective of the block variable
        x: Current point
        direction: Search direction (slope = grad . direction < 0)
        value: fn(x)
        slope: Directional derivative at x
        max_backtracks: Halvings tried after the full step

    Returns:
        LineSearch; scale is 0 and value unchanged when no trial was accepted
    """
    scale = 1.0
    for _ in range(max_backtracks + 1):
        trial = fn(x + scale * direction)
        if math.isfinite(trial) and trial < value and trial <= value + SUFFICIENT_DECREASE * scale * slope:
            return LineSearch(accepted=True, scale=scale, value=trial)
        scale *= BACKTRACK
    return LineSearch(accepted=False, scale=0.0, value=value)


# moved: accepted step. rested: no move, retry next sweep. stationary: no descent
# longer than step_tolerance. stalled: line search exhausted above step_tolerance.
StepStatus = Literal["moved", "rested", "stationary", "stalled"]


class BlockStep(NamedTuple):
    x: torch.Tensor
    value: float
    length: float
    status: StepStatus


def _exhausted(config: FitConfig) -> StepStatus:
    return "stationary" if BACKTRACK ** config.max_backtracks <= config.step_tolerance else "stalled"


class DepthBlock:
    """
    Per-pixel adaptive sign steps on log2-depth.

    Every entry moves by its own step size against the sign of its gradient.
    The size grows while the sign holds and shrinks when it flips; an entry
    whose sign just flipped rests for one step. The line search scales the
    whole move.
    """

    def __init__(self, shape: Tuple[int, ...], config: FitConfig):
        self.config = config
        self.size = torch.full(shape, config.depth_step, dtype=DTYPE)
        self.sign = torch.zeros(shape, dtype=DTYPE)

    def restart(self) -> None:
        self.size.fill_(self.config.depth_step)
        self.sign.zero_()

    def direction(self, grad: torch.Tensor) -> torch.Tensor:
        sign = grad.sign()
        agree = sign * self.sign
        self.size = torch.where(
            agree > 0, self.size * STEP_GROWTH, torch.where(agree < 0, self.size * STEP_SHRINK, self.size)
        ).clamp(max=MAX_DEPTH_STEP)
        self.sign = torch.where(agree < 0, torch.zeros_like(sign), sign)
        return -self.size * self.sign

    def step(self, x: torch.Tensor, grad: torch.Tensor, value: float, fn: Callable[[torch.Tensor], float]) -> BlockStep:
        if not bool(grad.ne(0).any()):
            return BlockStep(x=x, value=value, length=0.0, status="stationary")
        direction = self.direction(grad)
        if not bool(direction.ne(0).any()):
            return BlockStep(x=x, value=value, length=0.0, status="rested")
        slope = float((grad * direction).sum())
        search = backtracking_line_search(fn, x, direction, value, slope, self.config.max_backtracks)
        if search.accepted:
            if search.scale < 1.0:
                self.size = self.size * search.scale
            move = search.scale * direction
            return BlockStep(x=x + move, value=search.value, length=float(move.abs().max()), status="moved")

        self.size = self.size * BACKTRACK
        self.sign.zero_()
        return BlockStep(x=x, value=value, length=0.0, status=_exhausted(self.config))


class PoseBlock:
    """
    Dense BFGS on the stacked param6 vectors.

    The first step after a restart runs along the normalised negative
    gradient with length pose_step. Curvature pairs that fail s.y > 0 are
    skipped, and a refresh drops the pending pair because the frozen
    objective changed under it.
    """

    def __init__(self, config: FitConfig):
        self.config = config
        self.inverse_hessian: Optional[torch.Tensor] = None
        self.previous: Optional[Tuple[torch.Tensor, torch.Tensor]] = None

    def restart(self) -> None:
        self.inverse_hessian = None
        self.previous = None

    def forget_pair(self) -> None:
        self.previous = None

    def _update(self, x: torch.Tensor, grad: torch.Tensor) -> None:
        if self.previous is None:
            return
        s = x - self.previous[0]
        y = grad - self.previous[1]
        sy = float(s @ y)
        if sy <= 1e-12 * float(s.norm() * y.norm()):
            return
        if self.inverse_hessian is None:
            self.inverse_hessian = (sy / float(y @ y)) * torch.eye(x.numel(), dtype=DTYPE)
        rho = 1.0 / sy
        v = torch.eye(x.numel(), dtype=DTYPE) - rho * torch.outer(s, y)
        self.inverse_hessian = v @ self.inverse_hessian @ v.T + rho * torch.outer(s, s)

    def step(self, x: torch.Tensor, grad: torch.Tensor, value: float, fn: Callable[[torch.Tensor], float]) -> BlockStep:
        shape = x.shape
        flat_x = x.reshape(-1)
        flat_grad = grad.reshape(-1)
        if not bool(flat_grad.ne(0).any()):
            return BlockStep(x=x, value=value, length=0.0, status="stationary")

        self._update(flat_x, flat_grad)
        self.previous = (flat_x.clone(), flat_grad.clone())
        fresh = self.inverse_hessian is None
        if not fresh:
            direction = -(self.inverse_hessian @ flat_grad)
            if float(flat_grad @ direction) >= 0.0:
                self.restart()
                self.previous = (flat_x.clone(), flat_grad.clone())
                fresh = True
        if fresh:
            direction = -self.config.pose_step * flat_grad / flat_grad.norm()
        norm = float(direction.norm())
        if norm > MAX_POSE_STEP:
            direction = direction * (MAX_POSE_STEP / norm)

        slope = float(flat_grad @ direction)
        search = backtracking_line_search(
            lambda p: fn(p.reshape(shape)), flat_x, direction, value, slope, self.config.max_backtracks
        )
        if search.accepted:
            move = search.scale * direction
            return BlockStep(
                x=(flat_x + move).reshape(shape), value=search.value, length=float(move.norm()), status="moved"
            )

        status = _exhausted(self.config) if fresh else "rested"
        self.restart()
        return BlockStep(x=x, value=value, length=0.0, status=status)


def _history_row(iteration: int, evaluation: Evaluation, steps: Dict[str, float]) -> Dict[str, float]:
    reports = list(evaluation.reports.values())
    row = {"iteration": float(iteration)}
    for key, value in reports[0].term_values().items():
        row[key] = float(np.mean([r.term_values()[key] for r in reports]))
    row["objective"] = float(evaluation.objective)
    row.update(steps)
    return row


def _without_point_term(config: FitConfig) -> FitConfig:
    return config.model_copy(update={"terms": config.terms.model_copy(update={"use_3d": False})})


# ============================================================================
# Fitting
# ============================================================================

def fit_snippet(
    images: Sequence[torch.Tensor],
    labels: Sequence[torch.Tensor],
    K: Intrinsics,
    config: Optional[FitConfig] = None,
    init_depth: Union[float, Sequence[torch.Tensor], torch.Tensor] = 10.0,
    init_poses: Optional[Sequence[PoseSE3]] = None,
) -> FitResult:
    """
    Recover depth and adjacent poses of a snippet.

    The fit converges when every block is stationary right after a refresh
    (its line search failed down to step_tolerance) or when a refresh period
    lowers the objective by less than `tolerance` relative. A sweep that
    leaves the objective non-finite or larger restores the previous state
    and halts with a diagnostic, and so does a sweep in which no block moved
    because a line search ran out of backtracks above step_tolerance.

    Args:
        images: (3, H, W) image per frame
        labels: (H, W) label map per frame
        K: Intrinsics
        config: Fit configuration
        init_depth: Constant depth (meters) or one depth raster per frame
        init_poses: T_{k->k+1} per adjacent pair (zero motion when None)

    Returns:
        FitResult with the final state, the report of the reference frame
        (middle frame) and the reports of every target frame, all evaluated
        with fresh masks
    """
    config = config or FitConfig()
    n_frames = len(images)
    if n_frames < 2:
        raise ValueError("fitting needs at least two frames")
    if len(labels) != n_frames:
        raise ValueError(f"{n_frames} images but {len(labels)} label maps")
    height, width = images[0].shape[-2:]
    images = [img.to(DTYPE) for img in images]

    state = initial_state(n_frames, height, width, init_depth, init_poses)
    variables = {"depth": state.log_depth.clone(), "pose": state.pose_params.clone()}

    blocks: Dict[str, Union[DepthBlock, PoseBlock]] = {}
    if config.optimize_depth:
        blocks["depth"] = DepthBlock(tuple(variables["depth"].shape), config)
    if config.optimize_pose:
        blocks["pose"] = PoseBlock(config)

    warmup = config.terms.use_3d and config.point_warmup_sweeps > 0
    stage = _without_point_term(config) if warmup else config

    def evaluate_at(name: Optional[str] = None, x: Optional[torch.Tensor] = None, frozen=None) -> Evaluation:
        current = dict(variables)
        if name is not None:
            current[name] = x
        with torch.no_grad():
            return evaluate(current["depth"], current["pose"], images, labels, K, stage, frozen)

    def value_and_grad(name: str, frozen) -> Tuple[float, torch.Tensor]:
        if config.gradient_mode == "analytic":
            var = variables[name].clone().requires_grad_(True)
            current = {**variables, name: var}
            objective = evaluate(current["depth"], current["pose"], images, labels, K, stage, frozen).objective
            (grad,) = torch.autograd.grad(objective, [var], allow_unused=True)
            return float(objective.detach()), grad if grad is not None else torch.zeros_like(var)
        value = float(evaluate_at(frozen=frozen).objective)
        fd_step = FD_STEP_DEPTH if name == "depth" else FD_STEP_POSE
        grad = finite_difference(lambda x: float(evaluate_at(name, x, frozen).objective), variables[name], fd_step)
        return value, grad

    def end_warmup(reason: str) -> None:
        nonlocal warmup, stage
        warmup, stage = False, config
        for block in blocks.values():
            block.restart()
        logger.info(f"3D point term joins at sweep {state.iteration} ({reason})")

    logger.info(
        f"Fitting {n_frames} frames of {width}x{height}: "
        f"{list(blocks)} for up to {config.max_iterations} sweeps"
    )

    frozen: Dict[int, FrozenSelection] = {}
    refresh_due = True
    since_refresh = 0
    period_start = math.inf
    for iteration in range(config.max_iterations):
        if not blocks:
            break
        if warmup and iteration >= config.point_warmup_sweeps:
            end_warmup("warm-up budget spent")
            refresh_due = True
        if refresh_due or since_refresh >= config.mask_refresh_period:
            frozen = freeze(evaluate_at().reports)
            period_start = float(evaluate_at(frozen=frozen).objective)
            refresh_due, since_refresh = False, 0
            if "pose" in blocks:
                blocks["pose"].forget_pair()
            logger.debug(f"Sweep {iteration}: masks refrozen")

        saved = {name: x.clone() for name, x in variables.items()}
        before: Optional[float] = None
        steps: Dict[str, float] = {}
        statuses: List[StepStatus] = []
        for name, block in blocks.items():
            value, grad = value_and_grad(name, frozen)
            if before is None:
                before = value
            result = block.step(
                variables[name], grad, value, lambda x, name=name: float(evaluate_at(name, x, frozen).objective)
            )
            variables[name] = result.x
            steps[f"{name}_step"] = result.length
            statuses.append(result.status)

        evaluation = evaluate_at(frozen=frozen)
        after = float(evaluation.objective)
        since_refresh += 1

        if not math.isfinite(after) or after > before:
            variables = saved
            state.halted = f"objective increased at sweep {iteration}: {before:.6g} -> {after:.6g}"
            logger.warning(f"Fit halted, best-so-far state kept: {state.halted}")
            break

        state.history.append(_history_row(iteration, evaluation, steps))
        state.iteration = iteration + 1
        logger.debug(f"Sweep {iteration}: objective {before:.6g} -> {after:.6g}")

        if "stalled" in statuses and "moved" not in statuses:
            state.halted = f"no descent step within {config.max_backtracks} backtracks at sweep {iteration}"
            logger.warning(f"Fit halted, best-so-far state kept: {state.halted}")
            break

        if all(status == "stationary" for status in statuses):
            if since_refresh > 1:
                refresh_due = True
                continue
            if warmup:
                end_warmup("warm-up stationary")
                refresh_due = True
                continue
            state.converged = True
            break

        if since_refresh >= config.mask_refresh_period:
            decrease = (period_start - after) / max(abs(period_start), 1e-300)
            if decrease < config.tolerance:
                if warmup:
                    end_warmup("warm-up converged")
                    refresh_due = True
                    continue
                state.converged = True
                break

    state.log_depth = variables["depth"].detach().clone()
    state.pose_params = variables["pose"].detach().clone()
    with torch.no_grad():
        final = evaluate(state.log_depth, state.pose_params, images, labels, K, config)
    reference = n_frames // 2 if n_frames // 2 in final.reports else next(iter(final.reports))
    report = final.reports[reference]
    logger.info(
        f"Fit finished after {state.iteration} sweeps "
        f"({'converged' if state.converged else state.halted or 'iteration budget spent'}): {report}"
    )
    return FitResult(state=state, report=report, reports=final.reports)
