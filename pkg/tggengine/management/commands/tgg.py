from django.core.management.base import BaseCommand

from tggengine.cli import add_tgg_arguments, run_cli


class Command(BaseCommand):
    help = "Run the mini-Java <-> flowgraph transformations (parse, unparse, forward, backward, roundtrip, check, link)."

    def add_arguments(self, parser):
        add_tgg_arguments(parser)

    def handle(self, *args, **options):
        argv = [options["command"], options["input"]]
        for flag in ("output", "dot", "rules"):
            if options[flag]:
                argv += [f"--{flag}", options[flag]]
        if options["trace"]:
            argv.append("--trace")

        code = run_cli(argv, stdout=self.stdout, stderr=self.stderr)
        if code:
            raise SystemExit(code)
