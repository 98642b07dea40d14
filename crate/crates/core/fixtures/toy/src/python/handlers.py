import subprocess


def process(data):
    # strip surrounding whitespace and lower-case every line of input
    cleaned = []
    for line in data.splitlines():
        cleaned.append(line.strip().lower())
    return cleaned


def handle(event, log_path):
    # append the event payload to the audit log on disk
    with open(log_path, "a", encoding="utf-8") as out:
        out.write(str(event) + "\n")


def run(command):
    # launch an external shell command and capture its output
    completed = subprocess.run(command, shell=True, capture_output=True, text=True)
    return completed.stdout


def update(settings, defaults):
    # fill any missing option keys from the defaults mapping
    for key, value in defaults.items():
        settings.setdefault(key, value)
    return settings


def convert(celsius):
    # turn a temperature in celsius degrees into fahrenheit degrees
    return celsius * 9.0 / 5.0 + 32.0
