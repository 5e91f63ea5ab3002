from billiard_lab.commands import cli

cli(prog_name="billiard-lab")
