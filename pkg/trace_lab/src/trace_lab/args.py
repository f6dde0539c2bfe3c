def add_common_arguments(parser):
    """
    common arguments for every experiment command
    """
    group = parser.add_argument_group("Common Arguments")
    group.add_argument(
        "--n", "-n",
        type=int,
        required=False,
        default=4,
        help="Specify the matrix size n of M_n (default: 4)."
    )
    group.add_argument(
        "--d", "-d",
        type=int,
        required=False,
        default=2,
        help="Specify the number of free generators, or the corner dimension of M_n * M_n samples (default: 2)."
    )
    group.add_argument(
        "--k", "-k",
        type=int,
        required=False,
        default=3,
        help="Specify the dimension of sampled free-group representations (default: 3)."
    )
    group.add_argument(
        "--eps", "-e",
        type=float,
        required=False,
        default=0.1,
        help="Specify the approximation parameter eps (default: 0.1)."
    )
    group.add_argument(
        "--radius", "-r",
        type=int,
        required=False,
        default=3,
        help="Specify the word length of moment reports (default: 3)."
    )
    group.add_argument(
        "--seed", "-s",
        type=int,
        required=False,
        default=0,
        help="Specify the random seed, recorded in the report (default: 0)."
    )
    group.add_argument(
        "--tries", "-t",
        type=int,
        required=False,
        default=32,
        help="Specify the number of perturbation attempts (default: 32)."
    )
    group.add_argument(
        "--tol-structural", "-ts",
        type=float,
        required=False,
        default=1e-9,
        help="Specify the tolerance of operator identities (default: 1e-9)."
    )
    group.add_argument(
        "--tol-rank", "-tr",
        type=float,
        required=False,
        default=1e-9,
        help="Specify the numerical rank tolerance (default: 1e-9)."
    )
    group.add_argument(
        "--closure-max-dim", "-cd",
        type=int,
        required=False,
        default=40,
        help="Specify the largest dimension decided by algebra closure (default: 40)."
    )
    group.add_argument(
        "--out", "-o",
        type=str,
        required=False,
        default=None,
        help="Specify the report file (default: <command>.json in the output directory)."
    )
    group.add_argument(
        "--output-dir", "-od",
        type=str,
        required=False,
        default=None,
        help="Specify the output directory, exported as TRACE_LAB_OUTPUT_DIR (default: current directory)."
    )
    group.add_argument(
        "--csv", "-c",
        action="store_true",
        required=False,
        default=False,
        help="Also write the gates as a CSV file next to the report (default: False)."
    )
    group.add_argument(
        "--diagnostics", "-D",
        action="store_true",
        required=False,
        default=False,
        help="Run the claim diagnostics of the M_n * M_n verification (default: False)."
    )
    group.add_argument(
        "--verbose", "-v",
        action="store_true",
        required=False,
        default=False,
        help="Log at DEBUG level (default: False)."
    )


def add_input_arguments(parser):
    """
    inputs and command-specific parameters
    """
    group = parser.add_argument_group("Input Arguments")
    group.add_argument(
        "--input", "-i",
        type=str,
        action="append",
        required=False,
        default=None,
        help="Specify an input file; repeat for commands taking two (default: sampled inputs)."
    )
    group.add_argument(
        "--table", "-T",
        type=str,
        required=False,
        default="s3",
        help="Specify a bundled character table (z2, z3, z4, z6, s3) or a table file (default: s3)."
    )
    group.add_argument(
        "--m", "-m",
        type=int,
        required=False,
        default=2,
        help="Specify the multiplicity or amplification factor (default: 2)."
    )
    group.add_argument(
        "--r-rank", "-R",
        type=int,
        required=False,
        default=None,
        help="Specify the rank of the added corner projection (default: 1)."
    )
    group.add_argument(
        "--samples", "-N",
        type=int,
        required=False,
        default=100,
        help="Specify the number of sampled traces (default: 100)."
    )
    group.add_argument(
        "--words", "-W",
        type=str,
        required=False,
        default=None,
        help="Specify a word list file for the moment report of midpoint-f2 or amplify (default: all words up to --radius)."
    )
    group.add_argument(
        "--channel-threshold", "-ct",
        type=float,
        required=False,
        default=None,
        help="Specify the largest entrywise distance midpoint-channel accepts (default: --eps)."
    )
    group.add_argument(
        "--save", "-S",
        type=str,
        required=False,
        default=None,
        help="Also write the constructed representation or channel to this file (default: not written)."
    )
