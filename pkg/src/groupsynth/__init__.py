"""groupsynth: group-conditional synthetic data augmentation and evaluation.

Pipeline: sample unbalanced group splits from tabular data, generate
group-tailored synthetic rows through a chat-completion backend (or a
deterministic mock), compare against standard small-group remedies
(upweighting, separate models, SMOTE), and evaluate per-group AUROC/AUPRC
plus synthetic-data quality diagnostics.
"""

from .augment import MethodId, TrainingSet, assemble, group_weights, smote_upsample
from .data import (
    Encoder,
    FeatureSpec,
    GroupSample,
    Schema,
    Table,
    load_schema,
    load_table,
    make_table,
    sample_groups,
    select_prompt_examples,
)
from .diagnostics import (
    DiagnosticsReport,
    build_diagnostics_report,
    correlation_matrix,
    discriminator_report,
    kde2d,
    l1_nn_distances,
    write_diagnostics,
)
from .fixture import FixtureSpec, load_fixture_spec, make_fixture
from .genclient import (
    BackendConfig,
    GenerationBatch,
    GenerationCache,
    generate_to_target,
    mock_generate,
    parse_batch,
    request_batch,
)
from .metrics import EvalResult, auprc, auroc, evaluate_group
from .model import (
    ForestConfig,
    ForestModel,
    LogisticConfig,
    LogisticModel,
    fit_forest,
    fit_logistic,
    forest_predict_proba,
    predict_proba,
)
from .prompt import PromptSpec, build_prompt, render, serialize_examples
from .runner import (
    ExperimentConfig,
    ResultsGrid,
    build_context,
    load_experiment_config,
    read_results_csv,
    run_cell,
    run_grid,
    sweep_minority_size,
    sweep_temperature,
    write_report,
)

__version__ = "0.1.0"
