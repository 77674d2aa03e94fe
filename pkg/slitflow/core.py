import logging
import sys
from optparse import OptionParser, OptionGroup

from slitflow import classifier
from slitflow import lab
from slitflow import settings
from slitflow import shell
from slitflow.reports import FORMATS

LOG_FORMAT = '%(levelname)s %(name)s: %(message)s'

# option dest -> RunConfig key
MODEL_FLAGS = (
    ('--family', 'family', 'string', "Flow family (%s)" % ', '.join(classifier.FAMILIES)),
    ('--kappa', 'kappa', 'float', "SLE parameter kappa"),
    ('--alpha', 'alpha', 'float', "Drift alpha"),
    ('--beta', 'beta', 'float', "Coupling constant beta"),
    ('--T', 'T', 'float', "Time horizon"),
    ('--dt', 'dt', 'float', "Time step"),
    ('--n-paths', 'n_paths', 'int', "Number of paths"),
    ('--K', 'K', 'int', "Number of free-field modes"),
    ('--mesh', 'mesh', 'int', "Mesh cells per side of the field rectangle"),
    ('--t-max', 't_max', 'float', "Horizon of the strip flow in cardy-zhan"),
    ('--tolerance-sigma', 'tolerance_sigma', 'float', "z-score threshold of drift tests"),
    ('--dump', 'dump', 'string', "simulate output: flow, trace or hull"),
)


def build_parser():
    p = OptionParser(usage="%prog [options] [COMMAND]\n\ncommands: "
                     + ', '.join(settings.COMMANDS),
                     version="SlitFlow: %s" % shell.VERSION)
    p.add_option("--config", "-c", dest="config",
                 action="store", type="string",
                 default=None, help="YAML or JSON config file")
    p.add_option("--seed", dest="master_seed",
                 action="store", type="string",
                 default=None, help="Master seed (unsigned 64-bit)")
    p.add_option("--threads", dest="threads",
                 action="store", type="int",
                 default=None, help="Worker threads (default: $SLITFLOW_THREADS)")
    p.add_option("--out", "-o", dest="out",
                 action="store", type="string",
                 default=None, help="Output file (default: standard output)")
    p.add_option("--format", dest="format",
                 action="store", type="choice", choices=list(FORMATS),
                 default=None, help="Output format: csv, ndjson or json")
    p.add_option("--json", dest="format",
                 action="store_const", const='json',
                 help="Same as --format json")
    p.add_option("--verbose", "-v", dest="level",
                 action="store_const", const=logging.DEBUG,
                 default=logging.WARNING, help="Log debugging messages")
    p.add_option("--quiet", "-q", dest="level",
                 action="store_const", const=logging.ERROR,
                 help="Log errors only")
    group = OptionGroup(p, "Model and run options")
    for flag, dest, kind, text in MODEL_FLAGS:
        group.add_option(flag, dest=dest, action="store", type=kind,
                         default=None, help=text)
    group.add_option("--z", dest="z", action="append", type="string",
                     default=None, help="Point such as 0+1.5708i; repeat for more")
    p.add_option_group(group)
    return p


def run(argv=None):
    """
    This function starts the main program. Returns the exit status:
    0 when every check passed, 1 when some failed, 2 on usage or
    configuration errors.
    """
    p = build_parser()
    opts, args = p.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=opts.level, format=LOG_FORMAT)

    known = set(settings.COMMANDS) | set(shell.DEFAULT_ALIASES)
    if args and args[0] not in known and args[0].replace('_', '-') not in known:
        p.error("unknown command %r" % args[0])

    flags = dict(vars(opts))
    for key in ('config', 'level'):
        del flags[key]
    try:
        config = settings.RunConfig(opts.config, **flags)
        return shell.start_shell(config, args)
    except (settings.ConfigError, lab.ValidationError) as e:
        print("slitflow: error: %s" % e, file=sys.stderr)
        return 2
    except lab.ExperimentFailed as e:
        print("slitflow: failed: %s" % e, file=sys.stderr)
        return 1
