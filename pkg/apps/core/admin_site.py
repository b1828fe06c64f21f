from django.contrib.admin import AdminSite as DjangoAdminSite


class AdminSite(DjangoAdminSite):
    """
    Admin site for browsing recorded mapping runs and their block fits.
    """

    site_header = "Run Registry"  # Appears at the top of each admin page
    site_title = "Mapping Runs"  # Appears in the <title> of admin pages
    index_title = "Recorded pipeline runs"  # Appears on the admin homepage


# Create custom admin site instance
registry_site = AdminSite(name="registry_site")
