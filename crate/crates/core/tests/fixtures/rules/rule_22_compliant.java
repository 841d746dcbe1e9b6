public void showApplicationIcon(String packageName, ImageView view) throws Exception {
    PackageManager pm = getPackageManager();
    ApplicationInfo info = pm.getApplicationInfo(packageName, 0);
    view.setImageDrawable(info.loadIcon(pm));
}
