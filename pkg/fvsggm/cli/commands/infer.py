"""
Inference command: log-determinant, log-partition and marginals of a model file.
"""
import argparse

from fvsggm.cli.io import format_float, read_text, read_vector_csv, write_rows_csv
from fvsggm.core.exceptions import ModelFileError
from fvsggm.schemas.model_file import load_model
from fvsggm.services.fvs_inference import fvs_log_det, fvs_marginals, log_partition

MARGINAL_FIELDS = ["node", "label", "mean", "variance"]


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("infer", help="exact inference on a model file")
    parser.add_argument("model", help="model file")
    parser.add_argument("--h", dest="potential", help="CSV with the potential vector h (overrides the file's h)")
    parser.add_argument("--out", required=True, help="per-node marginals CSV")
    parser.set_defaults(func=infer)


def infer(args: argparse.Namespace) -> None:
    """
    Print ln det J and ln Z; write (node, mean, variance) per node.
    """
    model, model_file = load_model(read_text(args.model, ModelFileError))
    if args.potential:
        model = model.with_potential(read_vector_csv(args.potential, model.n))

    log_det = fvs_log_det(model)
    log_z = log_partition(model)
    marginals = fvs_marginals(model)

    labels = model_file.node_labels
    rows = [
        {
            "node": i,
            "label": labels[i] if labels else "",
            "mean": float(marginals.mean[i]),
            "variance": float(marginals.variance[i]),
        }
        for i in range(model.n)
    ]
    write_rows_csv(args.out, MARGINAL_FIELDS, rows)
    print(f"log_det={format_float(log_det)}")
    print(f"log_partition={format_float(log_z)}")
