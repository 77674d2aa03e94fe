import cmd
import logging
import shlex
import sys

import slitflow
from slitflow import lab
from slitflow.reports import run_header, write_rows
from slitflow.settings import COMMANDS, ConfigError

log = logging.getLogger(__name__)

VERSION = slitflow.__version__

# dashed command names map to their do_ methods as well
DEFAULT_ALIASES = {
    'cz': 'cardy_zhan',
    'Q': 'quit',
    'EOF': 'quit',
}


def start_shell(config, args=None):
    """
    start_shell builds a SlitShell from a RunConfig and either runs one
    command or starts the interactive loop.

    Arguments:
    - `config`: a slitflow.settings.RunConfig, not yet finalized
    - `args`: the command and its arguments; empty for interactive use

    Returns the exit status of the last command: 0 when every pass flag
    was true, 1 otherwise.
    """
    shell = SlitShell(config, interactive=not args)
    if args:
        line = shell.precmd(args)
        stop = shell.onecmd(line)
        shell.postcmd(stop, line)
    else:
        shell.cmdloop()
    return shell.status


class SlitShell(cmd.Cmd):
    """
    SlitShell runs the slitflow experiments, one command at a time or
    interactively, and writes their tables.
    """

    def __init__(self, config, interactive=True, stdout=None):
        """
        Arguments:
        - `config`: RunConfig shared by every command of the session
        - `interactive`: report errors and keep going instead of raising
        - `stdout`: where tables go when the config names no output file
        """
        cmd.Cmd.__init__(self, stdout=stdout)
        self.config = config
        self.interactive = interactive
        self.prompt = "slitflow->> "
        self.ruler = '-'
        self.intro = "SlitFlow %s\nType `help` for a list of commands" % VERSION
        self.aliases = dict(DEFAULT_ALIASES)
        self.aliases.update((name, name.replace('-', '_')) for name in COMMANDS)
        self.status = 0
        self.outcome = None

    def precmd(self, line):
        """
        Turns a command line, given as a string or as the argument list of
        the command line interface, into the line onecmd dispatches: the
        command word goes through the aliases, its arguments are kept.
        """
        words = line.split() if isinstance(line, str) else list(line)
        if not words:
            return ''
        words[0] = self.aliases.get(words[0], words[0])
        return ' '.join(words)

    def emptyline(self):
        pass

    def default(self, line):
        self._error("unknown command %r; commands: %s" % (line.split()[0], ', '.join(COMMANDS)))
        self.status = 2

    def _error(self, message):
        print("slitflow: %s" % message, file=sys.stderr)

    def _run(self, command, arg):
        if arg.strip():
            raise lab.ValidationError("%s takes no arguments, got %r" % (command, arg.strip()))
        config = self.config.finalize(command)
        self.outcome = lab.run(config)
        self._write(config, self.outcome)
        self.status = 0 if self.outcome.passed else 1
        if not self.outcome.passed:
            self._error("%s: some checks failed" % command)

    def _write(self, config, outcome):
        header = run_header(config.recorded(), config.master_seed)
        if config.out:
            with open(config.out, 'w', newline='') as stream:
                write_rows(stream, outcome.rows, outcome.columns, config.format, header)
            log.info("wrote %d rows to %s", len(outcome.rows), config.out)
        else:
            write_rows(self.stdout, outcome.rows, outcome.columns, config.format, header)

    def _command(self, command, arg):
        """ Run `command`; in interactive mode errors are reported, not raised """
        if not self.interactive:
            return self._run(command, arg)
        try:
            self._run(command, arg)
        except (ConfigError, lab.ValidationError) as e:
            self._error(e)
            self.status = 2
        except lab.ExperimentFailed as e:
            self._error(e)
            self.status = 1

    def do_classify(self, arg):
        """
        The coupled families at kappa: coefficients, u, and the residuals
        of the coupling system and of the generator acting on u
        """
        self._command('classify', arg)

    def do_check_identities(self, arg):
        """
        Hadamard's formula, generator annihilation and the b-sigma
        relation for every family at kappa

        Shortcut: check-identities
        """
        self._command('check-identities', arg)

    def do_simulate(self, arg):
        """
        Dump flow paths at the points z (dump: flow), chordal trace points
        (dump: trace) or hull grids (dump: hull)
        """
        self._command('simulate', arg)

    def do_verify_martingales(self, arg):
        """
        drift tests of the martingale observables along the flow

        Shortcut: verify-martingales
        """
        self._command('verify-martingales', arg)

    def do_gff_couple(self, arg):
        """
        Law of the free field pulled back by the flow and shifted by u_T

        Shortcut: gff-couple
        """
        self._command('gff-couple', arg)

    def do_cardy_zhan(self, arg):
        """
        Hitting probabilities of the strip flow against the triangle map

        Shortcuts: cardy-zhan, cz
        """
        self._command('cardy-zhan', arg)

    def do_sc_residual(self, arg):
        """
        Residuals of the triangle map's differential equation at the points z

        Shortcut: sc-residual
        """
        self._command('sc-residual', arg)

    def do_set(self, arg):
        """
        Set a configuration option for the following commands

        Usage: set kappa 6
               set z 0+1.5708i,1+1i
        """
        try:
            key, value = shlex.split(arg)
            self.config.update(**{key: value})
        except ValueError:
            self._error("usage: set OPTION VALUE")
        except ConfigError as e:
            self._error(e)

    def do_show(self, arg):
        """
        Show the options given so far in this session
        """
        for key in sorted(self.config.given):
            print("%s: %s" % (key, self.config.given[key]), file=self.stdout)

    def do_quit(self, _):
        """
        Quit the program

        Shortcut: Q
        """
        # cmd.Cmd passes an arg no matter what
        return True
