from django.contrib import admin

from tggengine.models import TransformationRun


class TransformationRunAdmin(admin.ModelAdmin):
    list_display = [
        "id",
        "scenario",
        "status",
        "verdict",
        "created_at",
    ]
    list_filter = ["scenario", "status", "verdict"]
    search_fields = ["source_text", "error"]


admin.site.register(TransformationRun, TransformationRunAdmin)
