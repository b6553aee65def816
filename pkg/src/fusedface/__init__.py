"""Visual/thermal face image fusion with eigenface features and RBF/MLP classifiers."""

from fusedface.eigenspace import Eigenspace, FeatureVector, fit_eigenspace, project, reconstruct
from fusedface.errors import DataError, NumericError
from fusedface.fusion import FusionWeights, default_weights, fuse
from fusedface.imageio import GrayImage, load_image, resize_bilinear, save_image
from fusedface.mlp import MlpModel, MlpTrainConfig, mlp_forward, mlp_gradient, mlp_predict, train_mlp
from fusedface.rbf import RbfModel, RbfTrainConfig, rbf_activations, rbf_predict, train_rbf

__version__ = "0.1.0"
