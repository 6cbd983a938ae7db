from django.db import models


class VerificationRun(models.Model):
    suite = models.CharField(max_length=32)
    seed = models.BigIntegerField(blank=True, null=True)
    n = models.PositiveIntegerField(blank=True, null=True)
    toolkit_version = models.CharField(max_length=16)
    passed = models.BooleanField(default=False)
    report_file = models.CharField(max_length=255, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    def __str__(self):
        status = 'pass' if self.passed else 'FAIL'
        return f"Verification {self.suite} (seed {self.seed}) - {status}"

    def failed_checks(self):
        return self.checks.filter(passed=False)

    class Meta:
        ordering = ['-created_at']


class VerificationCheck(models.Model):
    run = models.ForeignKey(VerificationRun, on_delete=models.CASCADE, related_name='checks')
    suite = models.CharField(max_length=32)
    check_name = models.CharField(max_length=64)
    residual = models.FloatField()
    threshold = models.FloatField()
    passed = models.BooleanField()

    def __str__(self):
        return f"{self.check_name}: {self.residual:.3e} <= {self.threshold:.1e}"

    class Meta:
        ordering = ['id']
