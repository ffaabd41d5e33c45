from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Настройки окружения.

    Секреты (токены провайдеров) берутся только отсюда, никогда из
    командной строки или RunConfig.
    """

    LOG_LEVEL: str = "INFO"

    # Live-провайдер событий (HTTP JSON)
    LIVE_API_TOKEN: str | None = None

    # Chat-провайдер (OpenAI-совместимый endpoint)
    OPENAI_API_KEY: str | None = None

    model_config = SettingsConfigDict(
        env_prefix="FUSE_", env_file=".env", extra="ignore", env_file_encoding="utf-8"
    )


settings = Settings()
