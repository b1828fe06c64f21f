# Generated by Django 5.2.3 on 2026-10-19 09:12

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='PipelineRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('kind', models.CharField(choices=[('fit', 'Single fit'), ('pipeline', 'Block pipeline')], max_length=16)),
                ('status', models.CharField(choices=[('running', 'Running'), ('succeeded', 'Succeeded'), ('failed', 'Failed')], default='running', max_length=16)),
                ('scheme', models.CharField(max_length=16)),
                ('seed', models.PositiveIntegerField(default=0)),
                ('config_path', models.CharField(blank=True, max_length=500)),
                ('config_hash', models.CharField(blank=True, max_length=64)),
                ('out_dir', models.CharField(max_length=500)),
                ('error', models.TextField(blank=True)),
                ('started_at', models.DateTimeField(auto_now_add=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
                ('updated_at', models.DateTimeField(auto_now=True)),
            ],
            options={
                'ordering': ['-started_at'],
            },
        ),
        migrations.CreateModel(
            name='BlockFit',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('block_id', models.IntegerField()),
                ('n_snps', models.PositiveIntegerField()),
                ('n_traits', models.PositiveIntegerField()),
                ('iterations', models.PositiveIntegerField()),
                ('local_update_count', models.PositiveBigIntegerField()),
                ('converged', models.BooleanField(default=False)),
                ('final_elbo', models.FloatField(blank=True, null=True)),
                ('wall_time_total', models.FloatField()),
                ('wall_time_local', models.FloatField()),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='blocks', to='pipeline.pipelinerun')),
            ],
            options={
                'ordering': ['run', 'block_id'],
                'unique_together': {('run', 'block_id')},
            },
        ),
    ]
