from fishnet.cli.main import app

app(prog_name="fishnet")
