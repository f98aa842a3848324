from .losses import masked_accuracy, mse_loss, softmax_xent_loss
from .loop import (Model, TrainingFault, TrainingState, TrainRecord, TrainSettings,
                   evaluate, loss_and_grads, new_state, train)
from .optim import (OptimizerKind, OptimizerState, adam_step, clip_by_global_norm,
                    global_norm, optimizer_step, sgd_step)
from .tasks import (Batch, TaskKind, TaskSpec, gen_adding_problem, gen_char_next_step,
                    gen_copy_memory)
