// CLI stub; subcommands land as modules come online.
int main() { return 0; }
