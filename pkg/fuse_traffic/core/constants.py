# Численное ядро
LAYER_NORM_EPS = 1e-5
GRAD_CHECK_STEP = 1e-6
# шаг центральной разности для собранной модели
MODEL_GRAD_CHECK_STEP = 1e-5
GRAD_CHECK_TOLERANCE = 1e-4
GRAD_CHECK_DENOM_FLOOR = 1e-8
GRAD_CHECK_MIN_STEP = 1e-7

# Граф дорожной сети
DEFAULT_ADJ_THRESHOLD = 0.1
EARTH_RADIUS_KM = 6371.0088

# Данные
DEFAULT_H_IN = 12
DEFAULT_H_OUT = 12
DEFAULT_INTERVAL_MINUTES = 5
STD_FLOOR = 1e-6

# Синтетический генератор
AR_COEFFICIENT = 0.8
RAMP_INTERVALS = 3
IMPACT_MULTIPLIERS = {
    "none": 1.0,
    "minor": 0.9,
    "moderate": 0.7,
    "high": 0.4,
}

# Поиск событий
COORD_DECIMALS = 3
MAX_RETRY_ATTEMPTS = 3
RETRY_DELAY_SECONDS = 0.5
DEFAULT_MAX_CONCURRENCY = 4
DEFAULT_RATE_PER_SECOND = 2.0
DEFAULT_TIMEOUT_MS = 30_000
TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M"

# Текстовый энкодер
DEFAULT_D_TEXT = 256
DEFAULT_D_MODEL = 64

# Обучение
ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8
DEFAULT_LR = 1e-3
DEFAULT_PATIENCE = 10

# Метрики
MAPE_MIN_ABS_TARGET = 1.0
DEFAULT_HORIZONS = (3, 6, 12)

# Чекпоинт
CHECKPOINT_MAGIC = b"FUSE"
CHECKPOINT_VERSION = 1

# Заголовки CSV
HISTORY_CSV_COLUMNS = ["epoch", "train_mae", "val_mae", "seconds"]
REPORT_CSV_COLUMNS = ["stratum", "horizon", "mae", "rmse", "mape", "count"]
ATTENTION_CSV_COLUMNS = ["head", "query_node", "key_node", "weight"]
