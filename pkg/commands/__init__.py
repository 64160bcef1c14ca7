from commands.bound import cmd_bound
from commands.rate import cmd_rate
from commands.selftest import cmd_selftest
from commands.verify import cmd_verify

COMMANDS = {
    "bound": cmd_bound,
    "verify": cmd_verify,
    "rate": cmd_rate,
    "selftest": cmd_selftest,
}
