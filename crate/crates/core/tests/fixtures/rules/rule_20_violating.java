File dir = new File("/tmp/cache/images");
dir.mkdirs();
