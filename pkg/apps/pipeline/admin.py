from django.contrib import admin

from apps.core.admin_site import registry_site

from .models import BlockFit, PipelineRun


class BlockFitInline(admin.TabularInline):
    model = BlockFit
    extra = 0
    can_delete = False
    readonly_fields = (
        "block_id",
        "n_snps",
        "n_traits",
        "iterations",
        "local_update_count",
        "converged",
        "final_elbo",
        "wall_time_total",
        "wall_time_local",
    )

    def has_add_permission(self, request, obj=None):
        return False


@admin.register(PipelineRun, site=registry_site)
class PipelineRunAdmin(admin.ModelAdmin):
    list_display = ("id", "kind", "scheme", "seed", "status", "started_at", "wall_time")
    list_filter = ("kind", "scheme", "status")
    search_fields = ("out_dir", "config_path", "config_hash")
    ordering = ("-started_at",)
    inlines = [BlockFitInline]
    fieldsets = (
        ("Run", {"fields": ("kind", "scheme", "seed", "status", "error")}),
        ("Inputs and outputs", {"fields": ("config_path", "config_hash", "out_dir")}),
        ("Timing", {"fields": ("started_at", "finished_at")}),
    )

    def get_readonly_fields(self, request, obj=None):
        """Recorded runs are read-only; the registry only mirrors what happened."""
        return [field.name for field in self.model._meta.fields]


@admin.register(BlockFit, site=registry_site)
class BlockFitAdmin(admin.ModelAdmin):
    list_display = (
        "run",
        "block_id",
        "n_snps",
        "iterations",
        "local_update_count",
        "converged",
        "wall_time_total",
    )
    list_filter = ("converged", "run__scheme")
