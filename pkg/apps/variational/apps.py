from django.apps import AppConfig


class VariationalConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.variational"
    verbose_name = "Model and Variational State"
