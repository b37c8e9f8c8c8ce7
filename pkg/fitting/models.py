"""
Run log for wtrans commands
Written only when a run asks for it (--record); artifacts never depend on it.
"""

from django.db import models


class RunLog(models.Model):
    """
    One wtrans invocation, for audit and debugging
    """
    STATUS_CHOICES = [
        ('pending', 'Pending'),
        ('running', 'Running'),
        ('success', 'Success'),
        ('failed', 'Failed'),
    ]

    command = models.CharField(max_length=50)
    seed = models.BigIntegerField(null=True, blank=True)
    config_hash = models.CharField(max_length=64, db_index=True)
    config = models.JSONField(default=dict)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='pending')

    started_at = models.DateTimeField(auto_now_add=True)
    completed_at = models.DateTimeField(null=True, blank=True)

    # Error tracking
    error_message = models.TextField(blank=True)
    error_traceback = models.TextField(blank=True)

    duration_seconds = models.DecimalField(max_digits=10, decimal_places=2, null=True, blank=True)

    class Meta:
        ordering = ['-started_at']

    def __str__(self):
        return f"{self.command} ({self.status})"


class FitRecord(models.Model):
    run = models.ForeignKey(RunLog, on_delete=models.CASCADE, related_name='fits')
    model_name = models.CharField(max_length=50)
    parameters = models.JSONField(default=dict)
    log_likelihood = models.FloatField()
    converged = models.BooleanField(default=True)
    iterations = models.IntegerField(default=0)

    class Meta:
        ordering = ['run', 'model_name']

    def __str__(self):
        return f"{self.model_name}: loglik {self.log_likelihood:.3f}"
