from .forms import TrainConfig
from .loop import Trainer, default_loss, evaluate, fit, make_sampler, train_epoch, transfer_finetune
from .losses import LOSS_KINDS, power_penalty, task_loss
from .models import METRIC_COLUMNS, Metrics
from .optim import SGD, Adam, make_optimizer
