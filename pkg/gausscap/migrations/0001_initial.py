# Generated by Django 5.2.7 on 2026-10-19 10:02

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='VerificationRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('suite', models.CharField(max_length=32)),
                ('seed', models.BigIntegerField(blank=True, null=True)),
                ('n', models.PositiveIntegerField(blank=True, null=True)),
                ('toolkit_version', models.CharField(max_length=16)),
                ('passed', models.BooleanField(default=False)),
                ('report_file', models.CharField(blank=True, max_length=255)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='VerificationCheck',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('suite', models.CharField(max_length=32)),
                ('check_name', models.CharField(max_length=64)),
                ('residual', models.FloatField()),
                ('threshold', models.FloatField()),
                ('passed', models.BooleanField()),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='checks', to='gausscap.verificationrun')),
            ],
            options={
                'ordering': ['id'],
            },
        ),
    ]
