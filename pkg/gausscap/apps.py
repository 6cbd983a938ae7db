from django.apps import AppConfig


class GausscapConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'gausscap'
    verbose_name = 'Gaussian observable capacity toolkit'
