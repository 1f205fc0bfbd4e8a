from django.db import models


class TransformationRun(models.Model):
    SCENARIO_CHOICES = [
        ("forward", "Forward"),
        ("backward", "Backward"),
        ("roundtrip", "Round trip"),
        ("check", "Consistency check"),
    ]
    STATUS_CHOICES = [
        ("success", "Success"),
        ("stuck", "Stuck"),
        ("invalid", "Invalid input"),
    ]

    scenario = models.CharField(max_length=20, choices=SCENARIO_CHOICES)
    source_text = models.TextField(blank=True, default="")
    result_text = models.TextField(null=True, blank=True)
    triple = models.JSONField(null=True, blank=True)
    trace = models.JSONField(null=True, blank=True)      # one trace line per rule application
    verdict = models.CharField(max_length=10, null=True, blank=True)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default="success")
    error = models.TextField(null=True, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    def __str__(self):
        return f"Run {self.id} - {self.scenario} ({self.status})"
