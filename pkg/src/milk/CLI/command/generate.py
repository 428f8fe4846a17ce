import dataclasses
import logging
from pathlib import Path
from typing import Annotated, List, Optional

import typer
from rich import print as rprint

from ...datamodel.features import write_feature_matrix
from ...datamodel.interactions import write_interactions
from ...datamodel.synthetic import SyntheticSpec, generate_synthetic
from ...load_config.load_config import BaseConfig
from ..state import DATA_DIR, INTERACTIONS_FILE, handle_errors, save_run_config, state

logger = logging.getLogger(__name__)


@handle_errors
def generate(
    n_users: Annotated[Optional[int], typer.Option("--n-users", help="用户数")] = None,
    n_items: Annotated[Optional[int], typer.Option("--n-items", help="物品数")] = None,
    latent_dim: Annotated[Optional[int], typer.Option("--latent-dim", help="潜因子维度 k")] = None,
    feature_dims: Annotated[Optional[List[int]], typer.Option("--feature-dim", help="各模态特征维度，可重复给出")] = None,
    noise_std: Annotated[Optional[float], typer.Option("--noise-std", help="特征噪声标准差")] = None,
    cross_gain: Annotated[Optional[float], typer.Option("--cross-gain", help="模态对非自身潜因子块的观察增益，取值 [0, 1]")] = None,
    interactions_per_user: Annotated[Optional[int], typer.Option("--interactions-per-user", help="每个用户的正样本数")] = None,
    shared_projection: Annotated[Optional[bool], typer.Option("--shared-projection", help="启用此选项，所有模态共用同一个投影")] = None
):
    run = state.run_config(
        n_users=n_users,
        n_items=n_items,
        latent_dim=latent_dim,
        feature_dims=feature_dims or None,
        noise_std=noise_std,
        cross_gain=cross_gain,
        interactions_per_user=interactions_per_user,
        shared_projection=shared_projection,
    )
    spec = SyntheticSpec(
        n_users=run.n_users,
        n_items=run.n_items,
        k=run.latent_dim,
        dims=list(run.feature_dims),
        noise_std=run.noise_std,
        cross_gain=run.cross_gain,
        interactions_per_user=run.interactions_per_user,
        seed=run.seed,
        shared_projection=run.shared_projection,
    )
    interactions, features = generate_synthetic(spec)

    data_dir = Path(run.out_dir) / DATA_DIR
    write_interactions(interactions, data_dir / INTERACTIONS_FILE)
    for m, matrix in enumerate(features.matrices):
        write_feature_matrix(matrix, data_dir / f"modality_{m}.mfea")
    BaseConfig(data_dir / "synthetic.json").update_config(dataclasses.asdict(spec))
    save_run_config(run)

    rprint(
        f"[green]合成数据生成成功！[/green]{spec.n_users} 用户, {spec.n_items} 物品, "
        f"{spec.M} 个模态, {len(interactions)} 条交互\n输出目录: {data_dir.resolve()}"
    )
