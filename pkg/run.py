from dotenv import load_dotenv

load_dotenv('.env')

from minnsim import create_cli  # noqa: E402

cli = create_cli()
if __name__ == '__main__':
    cli()
