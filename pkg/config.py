from os import getenv

DATA_DIR = getenv("MINN_DATA_DIR", "data")
OUTPUT_DIR = getenv("MINN_OUTPUT_DIR", "runs")
MNIST_TRAIN_IMAGES = getenv("MINN_MNIST_TRAIN_IMAGES", "data/train-images-idx3-ubyte")
MNIST_TRAIN_LABELS = getenv("MINN_MNIST_TRAIN_LABELS", "data/train-labels-idx1-ubyte")
MNIST_TEST_IMAGES = getenv("MINN_MNIST_TEST_IMAGES", "data/t10k-images-idx3-ubyte")
MNIST_TEST_LABELS = getenv("MINN_MNIST_TEST_LABELS", "data/t10k-labels-idx1-ubyte")
SEED = int(getenv("MINN_SEED", "0"))
LOG_LEVEL = getenv("MINN_LOG_LEVEL", "INFO")
CARRIER_HZ = float(getenv("MINN_CARRIER_HZ", "28e9"))  # 28 GHz -> lambda ~ 1.07 cm
CALIBRATION_SAMPLES = int(getenv("MINN_CALIBRATION_SAMPLES", "256"))
