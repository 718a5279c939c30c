"""radsurv: survival prognosis for glioma from segmentation masks.

Pipeline pieces: NIfTI volume/mask I/O and ROI derivation (``volumeio``),
analytic phantoms and synthetic cohorts (``phantoms``), mask-level image
features (``imagefeat``), the 107-feature radiomics set (``radiomics``),
recursive feature elimination (``featselect``), four regressor families
trained from scratch (``regressors``), survival binning and the five
evaluation metrics plus the experiment runner (``prognosis``), and a CLI
(``cli``).
"""

__version__ = "0.1.0"
