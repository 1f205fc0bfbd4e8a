from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="TransformationRun",
            fields=[
                ("id", models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name="ID")),
                (
                    "scenario",
                    models.CharField(
                        choices=[
                            ("forward", "Forward"),
                            ("backward", "Backward"),
                            ("roundtrip", "Round trip"),
                            ("check", "Consistency check"),
                        ],
                        max_length=20,
                    ),
                ),
                ("source_text", models.TextField(blank=True, default="")),
                ("result_text", models.TextField(blank=True, null=True)),
                ("triple", models.JSONField(blank=True, null=True)),
                ("trace", models.JSONField(blank=True, null=True)),
                ("verdict", models.CharField(blank=True, max_length=10, null=True)),
                (
                    "status",
                    models.CharField(
                        choices=[("success", "Success"), ("stuck", "Stuck"), ("invalid", "Invalid input")],
                        default="success",
                        max_length=20,
                    ),
                ),
                ("error", models.TextField(blank=True, null=True)),
                ("created_at", models.DateTimeField(auto_now_add=True)),
            ],
        ),
    ]
