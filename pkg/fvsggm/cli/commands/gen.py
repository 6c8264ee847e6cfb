"""
Generator commands: fBM covariances and random FVS models with samples.
"""
import argparse

from fvsggm.cli.arguments import nonnegative_int, positive_int
from fvsggm.cli.io import sidecar_path, write_matrix_csv, write_text
from fvsggm.models.gaussian import GaussianDensity
from fvsggm.schemas.model_file import ModelFile, ModelMetadata
from fvsggm.services.experiments import derive_seeds, fbm_covariance, model_covariance, random_fvs_model
from fvsggm.services.gaussian_core import sample_gaussian


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("gen", help="generate synthetic covariances and samples")
    kinds = parser.add_subparsers(dest="kind", required=True)

    fbm = kinds.add_parser("fbm", help="fractional Brownian motion covariance on t_i = i/n")
    fbm.add_argument("--n", type=positive_int, required=True)
    fbm.add_argument("--hurst", type=float, required=True)
    fbm.add_argument("--out", required=True, help="covariance CSV")
    fbm.set_defaults(func=gen_fbm)

    random = kinds.add_parser("random", help="random FVS model, its covariance or samples")
    random.add_argument("--n", type=positive_int, required=True)
    random.add_argument("--k", type=nonnegative_int, required=True)
    random.add_argument("--seed", type=int, required=True)
    random.add_argument("--samples", type=positive_int, help="write this many samples instead of the covariance")
    random.add_argument("--out", required=True, help="covariance or samples CSV")
    random.add_argument("--truth", help="model file of the true model (default: <out>.truth.json)")
    random.set_defaults(func=gen_random)


def gen_fbm(args: argparse.Namespace) -> None:
    write_matrix_csv(args.out, fbm_covariance(args.n, args.hurst).values)


def gen_random(args: argparse.Namespace) -> None:
    """
    The model and the samples use the same derived seeds as a recovery run with
    this seed.
    """
    model_seed, sample_seed = derive_seeds(args.seed)
    truth = random_fvs_model(args.n, args.k, model_seed)
    cov = model_covariance(truth)

    if args.samples:
        samples = sample_gaussian(GaussianDensity.zero_mean(cov), args.samples, sample_seed)
        write_matrix_csv(args.out, samples)
    else:
        write_matrix_csv(args.out, cov.values)

    metadata = ModelMetadata(algorithm="random-fvs-model", seed=args.seed)
    write_text(args.truth or sidecar_path(args.out, ".truth.json"), ModelFile.from_model(truth, metadata).to_json())
